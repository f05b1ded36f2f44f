use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use semimart_core::diagnostics::presets;
use semimart_core::hermite::{hermite_values, pair, Distribution, HermiteBasis, TestFunction};
use semimart_core::integrate::scalar::{h_dot, Coefficient, ElementaryScalarIntegrand};
use semimart_core::integrate::vector::vector_integrate;
use semimart_core::metrics::{r_ucp_estimate, ProcessEnsemble};
use semimart_core::paths::{
    simulate, simulate_ensemble, stop_path, uniform_grid, SemimartingaleSpec,
};
use semimart_core::{DiracSemimartingale, RandomPartition, ScalarPath, Trajectory};

const N: usize = 12;

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n)
}

fn jump_spec() -> SemimartingaleSpec {
    SemimartingaleSpec {
        mu: 0.3,
        jump_intensity: 3.0,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seminorms_increase_with_r(c in coeffs(N)) {
        let phi = TestFunction::new(c);
        for r in -3..3 {
            prop_assert!(phi.seminorm(r) <= phi.seminorm(r + 1));
        }
    }

    #[test]
    fn dual_seminorms_decrease_with_r(c in coeffs(N)) {
        let t = Distribution::new(c);
        for r in -3..3 {
            prop_assert!(t.dual_seminorm(r + 1) <= t.dual_seminorm(r));
        }
    }

    #[test]
    fn pairing_is_bounded_by_dual_seminorms(f in coeffs(N), c in coeffs(N), r in -2i32..3) {
        let t = Distribution::new(f);
        let phi = TestFunction::new(c);
        let lhs = pair(&t, &phi).unwrap().abs();
        prop_assert!(lhs <= t.dual_seminorm(r) * phi.seminorm(r) * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn pairing_is_bilinear(f in coeffs(N), c in coeffs(N), d in coeffs(N), a in -3.0f64..3.0) {
        let t = Distribution::new(f);
        let (phi, psi) = (TestFunction::new(c), TestFunction::new(d));
        let combined = &phi.scale(a) + &psi;
        let lhs = pair(&t, &combined).unwrap();
        let rhs = a * pair(&t, &phi).unwrap() + pair(&t, &psi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn evaluation_matches_basis_expansion(c in coeffs(N), x in -4.0f64..4.0) {
        let phi = TestFunction::new(c.clone());
        let direct: f64 = hermite_values(x, N).iter().zip(&c).map(|(h, a)| h * a).sum();
        prop_assert!((phi.eval(x) - direct).abs() <= 1e-12);
    }

    #[test]
    fn stopping_is_idempotent(seed in 0u64..1000, tau in 0.0f64..1.0) {
        let path = simulate(&jump_spec(), 32, seed).unwrap();
        let once = stop_path(&path, tau);
        prop_assert_eq!(&stop_path(&once, tau), &once);
        for &t in path.grid() {
            prop_assert_eq!(once.value(t), path.value(t.min(tau)));
        }
    }

    #[test]
    fn stopping_commutes(seed in 0u64..1000, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let path = simulate(&jump_spec(), 32, seed).unwrap();
        prop_assert_eq!(stop_path(&stop_path(&path, s), t), stop_path(&stop_path(&path, t), s));
    }

    #[test]
    fn elementary_integral_is_linear_in_h(seed in 0u64..500, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let path = simulate(&jump_spec(), 32, seed).unwrap();
        let obs = path.event_times();
        let h1 = ElementaryScalarIntegrand::new(a.into(), vec![0.0, 0.5, 1.0], vec![1.0.into(), (-0.5).into()], 1.0).unwrap();
        let h2 = ElementaryScalarIntegrand::new(
            b.into(),
            vec![0.0, 0.5, 1.0],
            vec![Coefficient::adapted(|h| h.current().tanh()), 0.25.into()],
            1.0,
        )
        .unwrap();
        let sum = ElementaryScalarIntegrand::new(
            (a + b).into(),
            vec![0.0, 0.5, 1.0],
            vec![Coefficient::adapted(|h| 1.0 + h.current().tanh()), (-0.25).into()],
            2.0,
        )
        .unwrap();
        let lhs = h_dot(&sum, &path, &obs).unwrap();
        let rhs = h_dot(&h1, &path, &obs).unwrap().combine(1.0, &h_dot(&h2, &path, &obs).unwrap(), 1.0).unwrap();
        prop_assert!(lhs.max_deviation(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn ucp_is_subadditive(seed in 0u64..200, c in -2.0f64..2.0) {
        let spec = SemimartingaleSpec::brownian(1.0, 2.0);
        let obs = uniform_grid(2.0, 32);
        let ens = |seed| {
            let paths = simulate_ensemble(&spec, 32, seed, 8).unwrap();
            ProcessEnsemble::new(paths.iter().map(|p| p.observe(&obs).unwrap()).collect()).unwrap()
        };
        let (a, b) = (ens(seed), ens(seed + 1).scaled(c));
        let sum = a.combine(1.0, &b, 1.0).unwrap();
        let lhs = r_ucp_estimate(&sum, 2).unwrap().value;
        let rhs = r_ucp_estimate(&a, 2).unwrap().value + r_ucp_estimate(&b, 2).unwrap().value;
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn ucp_shrinks_with_scale(seed in 0u64..200, c in 0.0f64..1.0) {
        let obs = uniform_grid(1.0, 32);
        let paths = simulate_ensemble(&SemimartingaleSpec::brownian(1.0, 1.0), 32, seed, 8).unwrap();
        let ens = ProcessEnsemble::new(paths.iter().map(|p| p.observe(&obs).unwrap()).collect()).unwrap();
        let small = r_ucp_estimate(&ens.scaled(c), 1).unwrap().value;
        let smaller = r_ucp_estimate(&ens.scaled(0.5 * c), 1).unwrap().value;
        prop_assert!(smaller <= small);
        prop_assert!(small <= r_ucp_estimate(&ens, 1).unwrap().value);
    }

    #[test]
    fn vector_integral_pairs_linearly(seed in 0u64..200, c in coeffs(8), d in coeffs(8)) {
        let n = 8;
        let path = simulate(&jump_spec(), 32, seed).unwrap();
        let r = presets::tensor_integrands(n, 1.0).unwrap().remove(2).1;
        let sigma = RandomPartition::dyadic(5, 1.0);
        let y = vector_integrate(&r, &DiracSemimartingale::new(n), &path, &sigma, path.grid()).unwrap();
        let (phi, psi) = (TestFunction::new(c), TestFunction::new(d));
        let lhs = y.pair_trajectory(&(&phi + &psi)).unwrap();
        let rhs = y.pair_trajectory(&phi).unwrap().combine(1.0, &y.pair_trajectory(&psi).unwrap(), 1.0).unwrap();
        prop_assert!(lhs.max_deviation(&rhs).unwrap() <= 1e-10);
    }
}

#[test]
fn shift_group_law_on_random_functions() {
    let basis = HermiteBasis::new(64, 160).unwrap();
    let phi = TestFunction::new(
        (0..64)
            .map(|j| {
                if j < 20 {
                    ((j * 7) as f64).sin() / (1.0 + j as f64)
                } else {
                    0.0
                }
            })
            .collect(),
    );
    let (a, b) = (0.4, -0.7);
    let twice = basis.shift(&basis.shift(&phi, a), b);
    let once = basis.shift(&phi, a + b);
    for x in [-2.0, -1.0, 0.0, 0.5, 2.0] {
        assert_abs_diff_eq!(twice.eval(x), once.eval(x), epsilon = 1e-6);
        assert_abs_diff_eq!(once.eval(x), phi.eval(x + a + b), epsilon = 1e-6);
    }
}

#[test]
fn quadratic_variation_of_jump_ledger() {
    let path = semimart_core::CadlagPath::from_parts(
        vec![0.0, 0.5, 1.0],
        vec![0.0, 0.0, 0.0],
        vec![(0.25, 1.0), (0.75, -2.0)],
    )
    .unwrap();
    let spec = SemimartingaleSpec {
        sigma: 0.0,
        ..Default::default()
    };
    assert_eq!(
        semimart_core::paths::quadratic_variation(&path, &spec, 1.0),
        5.0
    );
    assert_eq!(
        semimart_core::paths::quadratic_variation(&stop_path(&path, 0.5), &spec, 1.0),
        1.0
    );
    let tr: Trajectory = path.observe(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
    assert_eq!(tr.values(), &[0.0, 1.0, 1.0, -1.0, -1.0]);
}
