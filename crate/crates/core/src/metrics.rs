//! Monte-Carlo estimators of the UCP and Émery F-seminorms and of UCP
//! closeness for distribution-valued processes.
//!
//! Reductions over replicas run in parallel but always sum in replica order,
//! so estimates are reproducible bit for bit.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::scalar::{h_dot, Coefficient, ElementaryScalarIntegrand};
use crate::integrate::vector::DistributionPath;
use crate::paths::uniform_grid;
use crate::trajectory::{ScalarPath, Trajectory};

/// Replicas of a real process observed on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessEnsemble {
    paths: Vec<Trajectory>,
}

impl ProcessEnsemble {
    pub fn new(paths: Vec<Trajectory>) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidInput("ensemble needs at least one replica".into()))?;
        if paths.iter().any(|p| p.times() != first.times()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { paths })
    }

    /// `count` copies of the deterministic path `t ↦ f(t)`.
    pub fn deterministic(times: &[f64], count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let path = Trajectory::from_fn(times, f)?;
        Self::new(vec![path; count])
    }

    pub fn paths(&self) -> &[Trajectory] {
        &self.paths
    }

    pub fn count(&self) -> usize {
        self.paths.len()
    }

    pub fn times(&self) -> &[f64] {
        self.paths[0].times()
    }

    pub fn horizon(&self) -> f64 {
        *self.times().last().expect("trajectories are nonempty")
    }

    /// Replica-wise `a·self + b·other` (common random numbers).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.count() != other.count() {
            return Err(Error::ReplicaMismatch {
                left: self.count(),
                right: other.count(),
            });
        }
        let paths = self
            .paths
            .iter()
            .zip(&other.paths)
            .map(|(x, y)| x.combine(a, y, b))
            .collect::<Result<_>>()?;
        Ok(Self { paths })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            paths: self.paths.iter().map(|p| p.map(|v| c * v)).collect(),
        }
    }
}

/// An ensemble estimate with its truncation tail bound and Monte-Carlo
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEstimate {
    pub value: f64,
    /// Bound on the omitted series tail, `2^{-n_max}`.
    pub tail_bound: f64,
    pub std_error: f64,
    pub replicas: usize,
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `Σ_{n=1}^{n_max} 2^{-n} (1 ∧ sup_{t≤n} |z_t|)` for one trajectory.
fn ucp_series(path: &Trajectory, n_max: usize) -> f64 {
    (1..=n_max)
        .map(|n| 0.5f64.powi(n as i32) * path.sup_abs_until(n as f64).min(1.0))
        .sum()
}

/// `r_ucp(z) ≈ Σ_{n=1}^{n_max} 2^{-n} E[1 ∧ sup_{t≤n} |z_t|]`.
pub fn r_ucp_estimate(ens: &ProcessEnsemble, n_max: usize) -> Result<MetricEstimate> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if ens.horizon() < n_max as f64 {
        return Err(Error::HorizonTooShort {
            horizon: ens.horizon(),
            n_max,
        });
    }
    let samples: Vec<f64> = ens.paths.par_iter().map(|p| ucp_series(p, n_max)).collect();
    let (value, std_error) = mean_and_se(&samples);
    Ok(MetricEstimate {
        value,
        tail_bound: 0.5f64.powi(n_max as i32),
        std_error,
        replicas: ens.count(),
    })
}

/// `d_ucp(A, B) = r_ucp(A - B)` on paired replicas.
pub fn d_ucp_estimate(
    a: &ProcessEnsemble,
    b: &ProcessEnsemble,
    n_max: usize,
) -> Result<MetricEstimate> {
    r_ucp_estimate(&a.combine(1.0, b, -1.0)?, n_max)
}

/// Finite family of elementary integrands with `|h| ≤ 1`; always contains
/// `h ≡ 1`.
#[derive(Debug, Clone)]
pub struct IntegrandDictionary {
    elements: Vec<ElementaryScalarIntegrand>,
}

impl IntegrandDictionary {
    /// The dictionary `{h ≡ 1}` on `[0, T]`.
    pub fn unit(horizon: f64) -> Result<Self> {
        Ok(Self {
            elements: vec![ElementaryScalarIntegrand::constant(1.0, horizon)?],
        })
    }

    /// `h ≡ 1`, the constants `±1/2` and `-1`, `random` random-sign block
    /// integrands and a greedy sign-of-increment integrand, each on
    /// `blocks` uniform cells of `[0, T]`.
    pub fn standard(horizon: f64, blocks: usize, random: usize, seed: u64) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::InvalidInput(
                "dictionary needs at least one block".into(),
            ));
        }
        let mut dict = Self::unit(horizon)?;
        for c in [-1.0, 0.5, -0.5] {
            dict.push(ElementaryScalarIntegrand::constant(c, horizon)?)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random {
            let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
            let a0 = sign(&mut rng);
            let coeffs = (0..blocks)
                .map(|_| Coefficient::Constant(sign(&mut rng)))
                .collect();
            dict.push(ElementaryScalarIntegrand::on_uniform_blocks(
                a0.into(),
                horizon,
                coeffs,
                1.0,
            )?)?;
        }
        // sign of the previous block's increment, read at the block start
        let times = uniform_grid(horizon, blocks);
        let coeffs = (0..blocks)
            .map(|i| {
                if i == 0 {
                    Coefficient::Constant(1.0)
                } else {
                    let prev = times[i - 1];
                    Coefficient::adapted(move |h| {
                        if h.current() >= h.value(prev) {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                }
            })
            .collect();
        dict.push(ElementaryScalarIntegrand::on_uniform_blocks(
            Coefficient::Constant(1.0),
            horizon,
            coeffs,
            1.0,
        )?)?;
        Ok(dict)
    }

    /// Adds an element; its declared bound must be at most 1.
    pub fn push(&mut self, h: ElementaryScalarIntegrand) -> Result<()> {
        if h.bound() > 1.0 {
            return Err(Error::InvalidInput(format!(
                "dictionary elements need |h| ≤ 1, bound is {}",
                h.bound()
            )));
        }
        self.elements.push(h);
        Ok(())
    }

    pub fn elements(&self) -> &[ElementaryScalarIntegrand] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

impl FromIterator<ElementaryScalarIntegrand> for IntegrandDictionary {
    fn from_iter<I: IntoIterator<Item = ElementaryScalarIntegrand>>(iter: I) -> Self {
        Self {
            elements: iter.into_iter().collect(),
        }
    }
}

/// Émery lower bound and the dictionary element attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmeryLowerBound {
    pub estimate: MetricEstimate,
    pub best_element: usize,
}

/// Lower bound for `r_em(z)`: the largest `r_ucp` estimate of `h·z` over
/// the dictionary, with `h·z` observed at `obs`.
pub fn r_em_estimate<P: ScalarPath>(
    paths: &[P],
    dict: &IntegrandDictionary,
    n_max: usize,
    obs: &[f64],
) -> Result<EmeryLowerBound> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    if paths.is_empty() {
        return Err(Error::InvalidInput("need at least one replica".into()));
    }
    let mut best: Option<EmeryLowerBound> = None;
    for (i, h) in dict.elements.iter().enumerate() {
        let integrals = paths
            .par_iter()
            .map(|p| h_dot(h, p, obs))
            .collect::<Result<Vec<_>>>()?;
        let estimate = r_ucp_estimate(&ProcessEnsemble::new(integrals)?, n_max)?;
        if best.is_none_or(|b| estimate.value > b.estimate.value) {
            best = Some(EmeryLowerBound {
                estimate,
                best_element: i,
            });
        }
    }
    Ok(best.expect("dictionary is nonempty"))
}

fn dual_seminorm_of(coeffs: impl Iterator<Item = f64>, r: i32) -> f64 {
    coeffs
        .enumerate()
        .map(|(j, f)| (2.0 * j as f64 + 2.0).powi(-2 * r) * f * f)
        .sum::<f64>()
        .sqrt()
}

/// `sup_{t ≤ T} p'_r(X_t - Y_t)` over the shared observation times.
pub fn sup_dual_distance(
    x: &DistributionPath,
    y: &DistributionPath,
    r: i32,
    horizon: f64,
) -> Result<f64> {
    if x.truncation() != y.truncation() {
        return Err(Error::DimensionMismatch {
            expected: x.truncation(),
            found: y.truncation(),
        });
    }
    if x.times() != y.times() {
        return Err(Error::GridMismatch);
    }
    let mut sup = 0.0f64;
    for (i, &t) in x.times().iter().enumerate() {
        if t > horizon {
            break;
        }
        let d = dual_seminorm_of(x.row(i).iter().zip(y.row(i)).map(|(a, b)| a - b), r);
        sup = sup.max(d);
    }
    Ok(sup)
}

/// Empirical `P(sup_{t≤T} p'_r(X_t - Y_t) ≥ eps)` over paired replicas.
pub fn ucp_dual_estimate(
    xs: &[DistributionPath],
    ys: &[DistributionPath],
    r: i32,
    horizon: f64,
    eps: f64,
) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::ReplicaMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::InvalidInput("need at least one replica".into()));
    }
    let hits = xs
        .par_iter()
        .zip(ys)
        .map(|(x, y)| sup_dual_distance(x, y, r, horizon).map(|d| usize::from(d >= eps)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / xs.len() as f64)
}

/// Least-squares slope of `log_base(y)` against `x`.
pub fn fit_log_slope(xs: &[f64], ys: &[f64], base: f64) -> f64 {
    let ly: Vec<f64> = ys.iter().map(|y| y.ln() / base.ln()).collect();
    fit_slope(xs, &ly)
}

/// Ordinary least-squares slope.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::Distribution;
    use crate::paths::{simulate_ensemble, CadlagPath, SemimartingaleSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_process_closed_form() {
        let times = uniform_grid(4.0, 16);
        let ens = ProcessEnsemble::deterministic(&times, 3, |_| 3.0).unwrap();
        let est = r_ucp_estimate(&ens, 4).unwrap();
        assert_eq!(est.value, 0.9375);
        assert_eq!(est.tail_bound, 0.0625);
        let ens = ProcessEnsemble::deterministic(&times, 2, |_| 0.25).unwrap();
        assert_abs_diff_eq!(
            r_ucp_estimate(&ens, 3).unwrap().value,
            0.875 * 0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_process_and_distances() {
        let times = uniform_grid(2.0, 8);
        let zero = ProcessEnsemble::deterministic(&times, 2, |_| 0.0).unwrap();
        let c = ProcessEnsemble::deterministic(&times, 2, |_| 0.5).unwrap();
        assert_eq!(r_ucp_estimate(&zero, 2).unwrap().value, 0.0);
        assert_eq!(d_ucp_estimate(&c, &c, 2).unwrap().value, 0.0);
        assert_eq!(d_ucp_estimate(&zero, &c, 2).unwrap().value, 0.75 * 0.5);
        assert_eq!(
            d_ucp_estimate(&zero, &c, 2).unwrap().value,
            d_ucp_estimate(&c, &zero, 2).unwrap().value
        );
    }

    #[test]
    fn horizon_and_replica_checks() {
        let times = uniform_grid(1.0, 8);
        let ens = ProcessEnsemble::deterministic(&times, 2, |t| t).unwrap();
        assert!(matches!(
            r_ucp_estimate(&ens, 2),
            Err(Error::HorizonTooShort { .. })
        ));
        let other = ProcessEnsemble::deterministic(&times, 3, |t| t).unwrap();
        assert!(matches!(
            d_ucp_estimate(&ens, &other, 1),
            Err(Error::ReplicaMismatch { .. })
        ));
    }

    #[test]
    fn emery_bound_for_increasing_path() {
        let path = CadlagPath::from_fn(1.0, 16, |t| t).unwrap();
        let dict = IntegrandDictionary::standard(1.0, 4, 8, 1).unwrap();
        let est = r_em_estimate(&[path], &dict, 1, &uniform_grid(1.0, 16)).unwrap();
        assert_eq!(est.estimate.value, 0.5);
    }

    #[test]
    fn empty_dictionary_is_rejected() {
        let path = CadlagPath::from_fn(1.0, 4, |t| t).unwrap();
        let dict: IntegrandDictionary = std::iter::empty().collect();
        assert!(matches!(
            r_em_estimate(&[path], &dict, 1, &[0.0, 1.0]),
            Err(Error::EmptyDictionary)
        ));
    }

    #[test]
    fn ucp_dual_cases() {
        let times = uniform_grid(1.0, 4);
        let x = DistributionPath::constant(&times, &Distribution::new(vec![1.0, 2.0, 3.0]));
        let xs = vec![x.clone(); 4];
        assert_eq!(ucp_dual_estimate(&xs, &xs, 1, 1.0, 1e-3).unwrap(), 0.0);
        let eps = 0.1;
        let d = Distribution::new(vec![1.0, 0.0, 0.0]);
        let d = d.scale(2.0 * eps / d.dual_seminorm(1));
        let shifted = DistributionPath::constant(&times, &d);
        let ys: Vec<_> = xs
            .iter()
            .map(|x| x.combine(1.0, &shifted, 1.0).unwrap())
            .collect();
        assert_eq!(ucp_dual_estimate(&xs, &ys, 1, 1.0, eps).unwrap(), 1.0);
        for k in 2..5 {
            let small = DistributionPath::constant(&times, &d.scale(0.5 / k as f64));
            let ys: Vec<_> = xs
                .iter()
                .map(|x| x.combine(1.0, &small, 1.0).unwrap())
                .collect();
            assert_eq!(ucp_dual_estimate(&xs, &ys, 1, 1.0, eps).unwrap(), 0.0);
        }
    }

    #[test]
    fn dual_seminorm_helper_matches_distribution() {
        let d = Distribution::new(vec![0.3, -1.0, 2.0, 0.5]);
        for r in -2..3 {
            assert_abs_diff_eq!(
                dual_seminorm_of(d.dual_coeffs().iter().copied(), r),
                d.dual_seminorm(r),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn brownian_estimates_are_reproducible() {
        let spec = SemimartingaleSpec::brownian(1.0, 2.0);
        let obs = uniform_grid(2.0, 64);
        let ens = |seed| {
            let paths = simulate_ensemble(&spec, 64, seed, 50).unwrap();
            ProcessEnsemble::new(paths.iter().map(|p| p.observe(&obs).unwrap()).collect()).unwrap()
        };
        assert_eq!(
            r_ucp_estimate(&ens(3), 2).unwrap(),
            r_ucp_estimate(&ens(3), 2).unwrap()
        );
    }
}
