//! The Dirac semimartingale `X_t = δ_{z_t}`, its convolutions `T ∗ δ_{z_t}`
//! and a pathwise check of the Itô formula
//!
//! ```text
//! T ∗ δ_{z_t} = T ∗ δ_{z_0} - A_t + ½ B_t + C_t
//! ```
//!
//! tested against a fixed `φ`. With `g(a) = T(φ(· + a))` the terms are
//!
//! ```text
//! A_t = -Σ_k g'(z_{τ_k}) (z_{τ_{k+1}∧t} - z_{τ_k∧t})
//! B_t =  Σ_k g''(z_{τ_k}) σ² (τ_{k+1}∧t - τ_k∧t)
//! C_t =  Σ_{s≤t} [g(z_s) - g(z_{s-}) - g'(z_{s-}) Δz_s]
//! ```
//!
//! on a partition that contains every jump time. `A` integrates the whole
//! increment, jumps included; `C` removes the first-order part of each
//! jump, so on pure-jump drivers the identity telescopes exactly.

use crate::error::{Error, Result};
use crate::hermite::{Distribution, HermiteBasis, ShiftKernel, TestFunction};
use crate::integrate::scalar::{CylindricalSemimartingale, Side};
use crate::integrate::vector::DistributionPath;
use crate::paths::{bracket_continuous, CadlagPath, RandomPartition, SemimartingaleSpec};
use crate::trajectory::{ScalarPath, Trajectory};

/// `<X_t, φ> = φ(z_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiracSemimartingale {
    truncation: usize,
}

impl DiracSemimartingale {
    pub fn new(truncation: usize) -> Self {
        Self { truncation }
    }
}

impl CylindricalSemimartingale for DiracSemimartingale {
    fn truncation(&self) -> usize {
        self.truncation
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        dirac_pair(path, t, phi, side)
    }
}

/// `<T ∗ δ_{z_t}, φ> = T(φ(· + z_t))`.
#[derive(Debug, Clone)]
pub struct ConvolvedDirac {
    kernel: ShiftKernel,
}

impl ConvolvedDirac {
    pub fn new(basis: &HermiteBasis, t: &Distribution) -> Result<Self> {
        Ok(Self {
            kernel: basis.shift_kernel(t)?,
        })
    }

    pub fn kernel(&self) -> &ShiftKernel {
        &self.kernel
    }
}

impl CylindricalSemimartingale for ConvolvedDirac {
    fn truncation(&self) -> usize {
        self.kernel.distribution().truncation()
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        let z = match side {
            Side::Value => path.value(t),
            Side::LeftLimit => path.left_limit(t),
        };
        self.kernel.eval(z, phi)
    }
}

/// `φ(z_t)` or `φ(z_{t-})`.
pub fn dirac_pair(path: &dyn ScalarPath, t: f64, phi: &TestFunction, side: Side) -> f64 {
    match side {
        Side::Value => phi.eval(path.value(t)),
        Side::LeftLimit => phi.eval(path.left_limit(t)),
    }
}

/// `T(φ(· + a))`.
pub fn conv_pair(
    basis: &HermiteBasis,
    t: &Distribution,
    a: f64,
    phi: &TestFunction,
) -> Result<f64> {
    basis.conv_pair(t, a, phi)
}

/// The three Itô terms and the left-hand side `g(z_t) - g(z_0)` at the
/// partition times.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoTerms {
    pub a: Trajectory,
    pub b: Trajectory,
    pub c: Trajectory,
    pub lhs: Trajectory,
}

impl ItoTerms {
    pub fn times(&self) -> &[f64] {
        self.a.times()
    }

    /// `lhs + A - ½B - C` at each time.
    pub fn residuals(&self) -> Vec<f64> {
        (0..self.a.len())
            .map(|i| {
                self.lhs.values()[i] + self.a.values()[i]
                    - 0.5 * self.b.values()[i]
                    - self.c.values()[i]
            })
            .collect()
    }

    pub fn sup_residual(&self) -> f64 {
        self.residuals().iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Distinct partition times up to the stopped horizon, checked to contain
/// every jump time of the driver.
fn checked_times(path: &CadlagPath, sigma: &RandomPartition) -> Result<Vec<f64>> {
    let mut times = sigma.times().to_vec();
    times.dedup();
    let last = *times.last().expect("partitions are nonempty");
    if let Some(&time) = path
        .jump_times()
        .iter()
        .find(|&&s| s <= last && !sigma.contains(s))
    {
        return Err(Error::MissingJumpTime { time });
    }
    Ok(times)
}

/// Pairing-level Itô terms for `T ∗ δ_z` tested against `φ` along `σ`.
pub fn ito_terms(
    basis: &HermiteBasis,
    t: &Distribution,
    path: &CadlagPath,
    spec: &SemimartingaleSpec,
    phi: &TestFunction,
    sigma: &RandomPartition,
) -> Result<ItoTerms> {
    let kernel = basis.shift_kernel(t)?;
    ito_terms_with_kernel(&kernel, path, spec, phi, sigma)
}

/// [`ito_terms`] with a precomputed kernel for `T`.
pub fn ito_terms_with_kernel(
    kernel: &ShiftKernel,
    path: &CadlagPath,
    spec: &SemimartingaleSpec,
    phi: &TestFunction,
    sigma: &RandomPartition,
) -> Result<ItoTerms> {
    let times = checked_times(path, sigma)?;
    let n = phi.truncation();
    let d1 = phi.padded(n + 1).differentiate();
    let d2 = phi.padded(n + 2).differentiate().differentiate();
    let g = |a: f64| kernel.eval(a, phi);
    let g1 = |a: f64| kernel.eval(a, &d1);
    let g2 = |a: f64| kernel.eval(a, &d2);

    let stop = path.stop_time();
    let bracket = |s: f64| bracket_continuous(spec, s.min(stop));
    let z0 = path.value(0.0);
    let g0 = g(z0);

    let m = times.len();
    let (mut a, mut b, mut c, mut lhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut z_prev = z0;
    let mut g1_prev = g1(z0);
    let mut g2_prev = if spec.sigma != 0.0 { g2(z0) } else { 0.0 };
    for k in 1..m {
        let (lo, hi) = (times[k - 1], times[k]);
        let z_hi = path.value(hi);
        a[k] = a[k - 1] - g1_prev * (z_hi - z_prev);
        b[k] = b[k - 1] + g2_prev * (bracket(hi) - bracket(lo));
        c[k] = c[k - 1];
        let jump = path.jump_at(hi);
        let g_hi = g(z_hi);
        if jump != 0.0 {
            let z_minus = path.left_limit(hi);
            c[k] += g_hi - g(z_minus) - g1(z_minus) * jump;
        }
        lhs[k] = g_hi - g0;
        z_prev = z_hi;
        g1_prev = g1(z_hi);
        if spec.sigma != 0.0 {
            g2_prev = g2(z_hi);
        }
    }
    Ok(ItoTerms {
        a: Trajectory::new(times.clone(), a)?,
        b: Trajectory::new(times.clone(), b)?,
        c: Trajectory::new(times.clone(), c)?,
        lhs: Trajectory::new(times, lhs)?,
    })
}

/// `sup_t |g(z_t) - g(z_0) + A_t - ½B_t - C_t|` over the partition times.
pub fn ito_residual(
    basis: &HermiteBasis,
    t: &Distribution,
    path: &CadlagPath,
    spec: &SemimartingaleSpec,
    phi: &TestFunction,
    sigma: &RandomPartition,
) -> Result<f64> {
    Ok(ito_terms(basis, t, path, spec, phi, sigma)?.sup_residual())
}

/// The Itô terms as distribution paths: row `j` holds the terms for
/// `φ = h_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoDistributionTerms {
    pub a: DistributionPath,
    pub b: DistributionPath,
    pub c: DistributionPath,
    pub lhs: DistributionPath,
}

/// `v_j = T(h_j'(· + a))` from `u_m = T(h_m(· + a))`, `m ≤ j + 1`.
fn derivative_values(u: &[f64], len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| {
            let down = if j > 0 {
                (j as f64 / 2.0).sqrt() * u[j - 1]
            } else {
                0.0
            };
            down - ((j + 1) as f64 / 2.0).sqrt() * u[j + 1]
        })
        .collect()
}

/// Distribution-level Itô terms; pairing a row with `φ` reproduces
/// [`ito_terms`] by linearity.
pub fn ito_terms_distribution(
    kernel: &ShiftKernel,
    path: &CadlagPath,
    spec: &SemimartingaleSpec,
    sigma: &RandomPartition,
) -> Result<ItoDistributionTerms> {
    let times = checked_times(path, sigma)?;
    let n = kernel.distribution().truncation();
    // u up to h_{N+1}, enough for first and second derivatives of h_{N-1}
    let values = |a: f64| {
        let u = kernel.basis_values_to(a, n + 2);
        let v1 = derivative_values(&u, n + 1);
        let v2 = derivative_values(&v1, n);
        (u[..n].to_vec(), v1[..n].to_vec(), v2)
    };
    let stop = path.stop_time();
    let bracket = |s: f64| bracket_continuous(spec, s.min(stop));
    let m = times.len();
    let (mut a, mut b, mut c, mut lhs) = (
        vec![0.0; m * n],
        vec![0.0; m * n],
        vec![0.0; m * n],
        vec![0.0; m * n],
    );

    let z0 = path.value(0.0);
    let (u0, mut v1_prev, mut v2_prev) = values(z0);
    let mut z_prev = z0;
    for k in 1..m {
        let (lo, hi) = (times[k - 1], times[k]);
        let z_hi = path.value(hi);
        let dz = z_hi - z_prev;
        let db = bracket(hi) - bracket(lo);
        let jump = path.jump_at(hi);
        let (u_hi, v1_hi, v2_hi) = values(z_hi);
        let jump_terms = (jump != 0.0).then(|| {
            let (u_minus, v1_minus, _) = values(path.left_limit(hi));
            (0..n)
                .map(|j| u_hi[j] - u_minus[j] - v1_minus[j] * jump)
                .collect::<Vec<_>>()
        });
        for j in 0..n {
            let (cur, prev) = (k * n + j, (k - 1) * n + j);
            a[cur] = a[prev] - v1_prev[j] * dz;
            b[cur] = b[prev] + v2_prev[j] * db;
            c[cur] = c[prev] + jump_terms.as_ref().map_or(0.0, |d| d[j]);
            lhs[cur] = u_hi[j] - u0[j];
        }
        z_prev = z_hi;
        v1_prev = v1_hi;
        v2_prev = v2_hi;
    }
    Ok(ItoDistributionTerms {
        a: DistributionPath::from_rows(times.clone(), n, a)?,
        b: DistributionPath::from_rows(times.clone(), n, b)?,
        c: DistributionPath::from_rows(times.clone(), n, c)?,
        lhs: DistributionPath::from_rows(times, n, lhs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::PI_POW_NEG_QUARTER;
    use crate::paths::simulate;
    use approx::assert_abs_diff_eq;

    fn basis() -> HermiteBasis {
        HermiteBasis::new(16, 48).unwrap()
    }

    fn e0(n: usize) -> TestFunction {
        TestFunction::basis(n, 0).unwrap()
    }

    fn t0(n: usize) -> Distribution {
        Distribution::basis(n, 0).unwrap()
    }

    #[test]
    fn dirac_pair_cases() {
        let zero = CadlagPath::from_fn(1.0, 4, |_| 0.0).unwrap();
        assert_abs_diff_eq!(
            dirac_pair(&zero, 0.5, &e0(8), Side::Value),
            PI_POW_NEG_QUARTER,
            epsilon = 1e-15
        );
        let jumpy =
            CadlagPath::from_parts(vec![0.0, 1.0], vec![0.0, 0.0], vec![(0.5, 1.0)]).unwrap();
        let phi = e0(8);
        assert_eq!(
            dirac_pair(&jumpy, 0.5, &phi, Side::LeftLimit),
            phi.eval(0.0)
        );
        assert_eq!(dirac_pair(&jumpy, 0.5, &phi, Side::Value), phi.eval(1.0));
    }

    #[test]
    fn conv_pair_gaussian_autocorrelation() {
        let b = basis();
        assert_abs_diff_eq!(
            conv_pair(&b, &t0(16), 1.0, &e0(16)).unwrap(),
            (-0.25f64).exp(),
            epsilon = 1e-10
        );
        let two = t0(16).scale(2.0);
        assert_abs_diff_eq!(
            conv_pair(&b, &two, 0.7, &e0(16)).unwrap(),
            2.0 * conv_pair(&b, &t0(16), 0.7, &e0(16)).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn constant_driver_has_zero_terms() {
        let path = CadlagPath::from_fn(1.0, 16, |_| 0.3).unwrap();
        let spec = SemimartingaleSpec {
            sigma: 0.0,
            ..Default::default()
        };
        let terms = ito_terms(
            &basis(),
            &t0(16),
            &path,
            &spec,
            &e0(16),
            &RandomPartition::dyadic(4, 1.0),
        )
        .unwrap();
        assert!(terms
            .a
            .values()
            .iter()
            .chain(terms.b.values())
            .chain(terms.c.values())
            .all(|&v| v == 0.0));
        assert_eq!(terms.sup_residual(), 0.0);
    }

    #[test]
    fn single_jump_c_term() {
        let path =
            CadlagPath::from_parts(vec![0.0, 1.0], vec![0.0, 0.0], vec![(0.5, 1.0)]).unwrap();
        let spec = SemimartingaleSpec {
            sigma: 0.0,
            ..Default::default()
        };
        let sigma = RandomPartition::dyadic(2, 1.0);
        let terms = ito_terms(&basis(), &t0(16), &path, &spec, &e0(16), &sigma).unwrap();
        let expected = (-0.25f64).exp() - 1.0;
        for (&t, &c) in terms.times().iter().zip(terms.c.values()) {
            if t >= 0.5 {
                assert_abs_diff_eq!(c, expected, epsilon = 1e-10);
            } else {
                assert_eq!(c, 0.0);
            }
        }
        assert!(terms.sup_residual() <= 1e-10);
    }

    #[test]
    fn missing_jump_time_is_rejected() {
        let path =
            CadlagPath::from_parts(vec![0.0, 1.0], vec![0.0, 0.0], vec![(0.3, 1.0)]).unwrap();
        let spec = SemimartingaleSpec {
            sigma: 0.0,
            ..Default::default()
        };
        let err = ito_terms(
            &basis(),
            &t0(16),
            &path,
            &spec,
            &e0(16),
            &RandomPartition::dyadic(2, 1.0),
        );
        assert!(matches!(err, Err(Error::MissingJumpTime { .. })));
    }

    #[test]
    fn distribution_level_matches_pairing_level() {
        let b = basis();
        let t = Distribution::new((0..16).map(|j| 1.0 / (1.0 + j as f64)).collect());
        let kernel = b.shift_kernel(&t).unwrap();
        let spec = SemimartingaleSpec {
            jump_intensity: 3.0,
            ..Default::default()
        };
        let path = simulate(&spec, 64, 4).unwrap();
        let sigma = RandomPartition::dyadic(6, 1.0).jump_refined(&path);
        let dist = ito_terms_distribution(&kernel, &path, &spec, &sigma).unwrap();
        let phi = TestFunction::new(
            (0..16)
                .map(|j| ((j * 5) as f64).sin() / (1.0 + j as f64))
                .collect(),
        );
        let terms = ito_terms_with_kernel(&kernel, &path, &spec, &phi, &sigma).unwrap();
        for (d, p) in [
            (&dist.a, &terms.a),
            (&dist.b, &terms.b),
            (&dist.c, &terms.c),
            (&dist.lhs, &terms.lhs),
        ] {
            let paired = d.pair_trajectory(&phi).unwrap();
            assert!(paired.max_deviation(p).unwrap() < 1e-12);
        }
    }
}
