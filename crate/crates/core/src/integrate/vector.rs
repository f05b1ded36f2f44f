//! Vector-valued integrals `∫ R dX` for finite-rank operator integrands
//! `R(t, ω) f = Σ_k h_k(t, ω) <f, H_k> G_k`.
//!
//! The integral is built weakly: its value on a test function `ψ` is the
//! real integral of `R'ψ = Σ_k h_k <G_k, ψ> H_k`, and at truncation `N` the
//! `N` basis pairings determine it completely.

use std::sync::Arc;

use rayon::prelude::*;

use super::scalar::{
    riemann_scalar, CylindricalSemimartingale, ElementaryTestFnIntegrand, ScalarIntegrand,
    StoppedIntegrand, StoppingRule, TestFnIntegrand,
};
use crate::error::{Error, Result};
use crate::hermite::{pair, Distribution, TestFunction};
use crate::metrics::{fit_log_slope, sup_dual_distance, ucp_dual_estimate};
use crate::paths::{stop_path, CadlagPath, RandomPartition};
use crate::trajectory::{History, ScalarPath, Trajectory};

/// One rank-one summand `h · (H ⊗ G)`.
#[derive(Clone)]
pub struct TensorTerm {
    pub h: Arc<dyn ScalarIntegrand>,
    pub test: TestFunction,
    pub dist: Distribution,
}

/// `R = Σ_k h_k (H_k ⊗ G_k)`.
#[derive(Clone)]
pub struct TensorIntegrand {
    truncation: usize,
    terms: Vec<TensorTerm>,
}

impl TensorIntegrand {
    pub fn new(truncation: usize, terms: Vec<TensorTerm>) -> Result<Self> {
        for term in &terms {
            for found in [term.test.truncation(), term.dist.truncation()] {
                if found != truncation {
                    return Err(Error::DimensionMismatch {
                        expected: truncation,
                        found,
                    });
                }
            }
        }
        Ok(Self { truncation, terms })
    }

    pub fn zero(truncation: usize) -> Self {
        Self {
            truncation,
            terms: Vec::new(),
        }
    }

    pub fn rank_one(
        h: impl ScalarIntegrand + 'static,
        test: TestFunction,
        dist: Distribution,
    ) -> Result<Self> {
        let n = test.truncation();
        Self::new(
            n,
            vec![TensorTerm {
                h: Arc::new(h),
                test,
                dist,
            }],
        )
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn terms(&self) -> &[TensorTerm] {
        &self.terms
    }

    /// `c·R`, scaling each `G_k`.
    pub fn scaled(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TensorTerm {
                dist: t.dist.scale(c),
                ..t.clone()
            })
            .collect();
        Self {
            truncation: self.truncation,
            terms,
        }
    }

    /// `R + S`.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if other.truncation != self.truncation {
            return Err(Error::DimensionMismatch {
                expected: self.truncation,
                found: other.truncation,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            truncation: self.truncation,
            terms,
        })
    }

    /// `R 1_{[0, τ]}`.
    pub fn stopped(&self, rule: StoppingRule) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TensorTerm {
                h: Arc::new(StoppedIntegrand {
                    inner: t.h.clone(),
                    rule,
                }),
                ..t.clone()
            })
            .collect();
        Self {
            truncation: self.truncation,
            terms,
        }
    }

    /// `P_n ∘ R`: each `G_k` projected onto its first `n` coefficients.
    pub fn project(&self, n: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let coeffs = t
                    .dist
                    .dual_coeffs()
                    .iter()
                    .enumerate()
                    .map(|(j, &f)| if j < n { f } else { 0.0 })
                    .collect();
                TensorTerm {
                    dist: Distribution::with_regularity(coeffs, t.dist.regularity()),
                    ..t.clone()
                }
            })
            .collect();
        Self {
            truncation: self.truncation,
            terms,
        }
    }

    /// `R(t) f = Σ_k h_k(t) <f, H_k> G_k`, with `h_k` read after `now`.
    pub fn apply(&self, hist: &History<'_>, f: &Distribution) -> Result<Distribution> {
        let mut out = Distribution::zero(self.truncation);
        for t in &self.terms {
            out.axpy(t.h.after(hist) * pair(f, &t.test)?, &t.dist);
        }
        Ok(out)
    }
}

fn dual_combination(
    r: &TensorIntegrand,
    psi: &TestFunction,
    h: impl Fn(&TensorTerm) -> f64,
) -> Result<TestFunction> {
    let mut out = TestFunction::zero(r.truncation);
    for term in &r.terms {
        let g = pair(&term.dist, psi)?;
        if g != 0.0 {
            out.axpy(h(term) * g, &term.test);
        }
    }
    Ok(out)
}

/// `R'(t) ψ = Σ_k h_k(t) <G_k, ψ> H_k`, predictable in `t`.
pub fn dual_apply(
    r: &TensorIntegrand,
    hist: &History<'_>,
    psi: &TestFunction,
) -> Result<TestFunction> {
    dual_combination(r, psi, |t| t.h.after(hist))
}

/// `R'(0) ψ`, the dual action on `{0}`.
pub fn dual_apply_initial(
    r: &TensorIntegrand,
    hist: &History<'_>,
    psi: &TestFunction,
) -> Result<TestFunction> {
    dual_combination(r, psi, |t| t.h.initial(hist))
}

/// The test-function integrand `R'ψ` for a fixed `ψ`.
pub struct DualIntegrand<'a> {
    pub r: &'a TensorIntegrand,
    pub psi: TestFunction,
}

impl TestFnIntegrand for DualIntegrand<'_> {
    fn truncation(&self) -> usize {
        self.r.truncation
    }

    fn initial(&self, hist: &History<'_>) -> TestFunction {
        dual_apply_initial(self.r, hist, &self.psi).expect("truncations agree")
    }

    fn after(&self, hist: &History<'_>) -> TestFunction {
        dual_apply(self.r, hist, &self.psi).expect("truncations agree")
    }
}

/// `R'(H)`: `t ↦ R'(t) H(t)`.
pub struct ComposedIntegrand<'a> {
    pub h: &'a ElementaryTestFnIntegrand,
    pub r: &'a TensorIntegrand,
}

impl TestFnIntegrand for ComposedIntegrand<'_> {
    fn truncation(&self) -> usize {
        self.r.truncation
    }

    fn initial(&self, hist: &History<'_>) -> TestFunction {
        dual_apply_initial(self.r, hist, &self.h.initial(hist)).expect("truncations agree")
    }

    fn after(&self, hist: &History<'_>) -> TestFunction {
        dual_apply(self.r, hist, &self.h.after(hist)).expect("truncations agree")
    }
}

/// `h_k · H_k` as a test-function integrand.
struct TermIntegrand<'a>(&'a TensorTerm);

impl TestFnIntegrand for TermIntegrand<'_> {
    fn truncation(&self) -> usize {
        self.0.test.truncation()
    }

    fn initial(&self, hist: &History<'_>) -> TestFunction {
        self.0.test.scale(self.0.h.initial(hist))
    }

    fn after(&self, hist: &History<'_>) -> TestFunction {
        let a = self.0.h.after(hist);
        if a == 0.0 {
            TestFunction::zero(self.0.test.truncation())
        } else {
            self.0.test.scale(a)
        }
    }
}

/// Dual coefficient trajectories `f_j(t) = <Y_t, h_j>` on observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionPath {
    times: Vec<f64>,
    truncation: usize,
    /// Row-major by observation time.
    coeffs: Vec<f64>,
}

impl DistributionPath {
    pub fn zeros(times: &[f64], truncation: usize) -> Self {
        Self {
            times: times.to_vec(),
            truncation,
            coeffs: vec![0.0; times.len() * truncation],
        }
    }

    pub fn from_rows(times: Vec<f64>, truncation: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != times.len() * truncation {
            return Err(Error::InvalidInput(
                "coefficient table does not match times × truncation".into(),
            ));
        }
        Ok(Self {
            times,
            truncation,
            coeffs,
        })
    }

    /// `Y_t = D` for all `t`.
    pub fn constant(times: &[f64], d: &Distribution) -> Self {
        let mut out = Self::zeros(times, d.truncation());
        for row in out.coeffs.chunks_mut(d.truncation()) {
            row.copy_from_slice(d.dual_coeffs());
        }
        out
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.truncation..(i + 1) * self.truncation]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coeffs.chunks(self.truncation)
    }

    pub fn distribution_at(&self, i: usize) -> Distribution {
        Distribution::new(self.row(i).to_vec())
    }

    /// `<Y_{t_i}, ψ>`.
    pub fn pair_at(&self, i: usize, psi: &TestFunction) -> f64 {
        self.row(i)
            .iter()
            .zip(psi.coeffs())
            .map(|(f, c)| f * c)
            .sum()
    }

    pub fn pair_trajectory(&self, psi: &TestFunction) -> Result<Trajectory> {
        if psi.truncation() != self.truncation {
            return Err(Error::DimensionMismatch {
                expected: self.truncation,
                found: psi.truncation(),
            });
        }
        Trajectory::new(
            self.times.clone(),
            (0..self.times.len())
                .map(|i| self.pair_at(i, psi))
                .collect(),
        )
    }

    /// `a·self + b·other` on the same times.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::GridMismatch);
        }
        if self.truncation != other.truncation {
            return Err(Error::DimensionMismatch {
                expected: self.truncation,
                found: other.truncation,
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            times: self.times.clone(),
            truncation: self.truncation,
            coeffs,
        })
    }

    /// Largest coefficientwise deviation from `other`.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        if self.times != other.times {
            return Err(Error::GridMismatch);
        }
        if self.truncation != other.truncation {
            return Err(Error::DimensionMismatch {
                expected: self.truncation,
                found: other.truncation,
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `t ↦ Y_{t∧τ}` on the same times (step reading between them).
    pub fn stopped(&self, tau: f64) -> Self {
        let frozen = self.times.partition_point(|&t| t <= tau).saturating_sub(1);
        let mut out = self.clone();
        for i in 0..self.times.len() {
            if self.times[i] > tau {
                let src = self.row(frozen).to_vec();
                out.coeffs[i * self.truncation..(i + 1) * self.truncation].copy_from_slice(&src);
            }
        }
        out
    }
}

/// `∫ R dX` sampled along `σ`: `f_j(t)` is the Riemann sum for `R'h_j`.
pub fn vector_integrate(
    r: &TensorIntegrand,
    x: &dyn CylindricalSemimartingale,
    path: &CadlagPath,
    partition: &RandomPartition,
    obs: &[f64],
) -> Result<DistributionPath> {
    if x.truncation() != r.truncation {
        return Err(Error::DimensionMismatch {
            expected: x.truncation(),
            found: r.truncation,
        });
    }
    let n = r.truncation;
    let mut out = DistributionPath::zeros(obs, n);
    // <Y_t, h_j> = Σ_k G_k[j] · ∫ h_k H_k dX
    for term in &r.terms {
        let scalar = riemann_scalar(&TermIntegrand(term), x, path, partition, obs)?;
        let g = term.dist.dual_coeffs();
        for (row, s) in out.coeffs.chunks_mut(n).zip(scalar.values()) {
            if *s != 0.0 {
                for (f, gj) in row.iter_mut().zip(g) {
                    *f += s * gj;
                }
            }
        }
    }
    Ok(out)
}

/// Localizing level for [`LocalizedIntegrand`].
pub type LocalizingLevel = StoppingRule;

/// An integrand known on each `[0, τ_n]` through a bounded tensor integrand.
#[derive(Clone)]
pub struct LocalizedIntegrand {
    /// Bounded integrand valid up to the given level.
    pub base: Arc<dyn Fn(&LocalizingLevel) -> TensorIntegrand + Send + Sync>,
    pub levels: Vec<LocalizingLevel>,
}

impl LocalizedIntegrand {
    pub fn new(
        base: impl Fn(&LocalizingLevel) -> TensorIntegrand + Send + Sync + 'static,
        levels: Vec<LocalizingLevel>,
    ) -> Self {
        Self {
            base: Arc::new(base),
            levels,
        }
    }

    /// `τ_n` on this path, made nondecreasing.
    pub fn stopping_times(&self, path: &CadlagPath) -> Vec<f64> {
        let mut running = 0.0f64;
        self.levels
            .iter()
            .map(|l| {
                running = running.max(l.time(path));
                running
            })
            .collect()
    }
}

/// Pastes `∫ R^{τ_n} dX` over `(τ_{n-1}, τ_n]`, checking that consecutive
/// pieces agree exactly where both are defined.
pub fn localize_integrate(
    r: &LocalizedIntegrand,
    x: &dyn CylindricalSemimartingale,
    path: &CadlagPath,
    partition: &RandomPartition,
    obs: &[f64],
) -> Result<DistributionPath> {
    let taus = r.stopping_times(path);
    let horizon = path.horizon().min(path.stop_time());
    let reached = taus.last().copied().unwrap_or(0.0);
    if reached < horizon {
        return Err(Error::LevelsNotExhausted { reached, horizon });
    }

    let pieces = r
        .levels
        .iter()
        .zip(&taus)
        .map(|(level, &tau)| {
            vector_integrate(&(r.base)(level), x, &stop_path(path, tau), partition, obs)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = x.truncation();
    let mut out = DistributionPath::zeros(obs, n);
    for (i, &t) in obs.iter().enumerate() {
        let piece = taus
            .iter()
            .position(|&tau| t <= tau)
            .unwrap_or(taus.len() - 1);
        out.coeffs[i * n..(i + 1) * n].copy_from_slice(pieces[piece].row(i));
        // overlap: every later piece must agree on [0, τ_piece]
        for later in &pieces[piece + 1..] {
            if later.row(i) != pieces[piece].row(i) {
                return Err(Error::OverlapMismatch { time: t });
            }
        }
    }
    Ok(out)
}

/// Both sides of `∫ H dY = ∫ R'(H) dX` with `Y = ∫ R dX` along `σ`.
///
/// `∫ H dY` is evaluated from `Y` at the observation times, so the block
/// times of `H` should be among them.
pub fn integrate_then_integrate(
    h: &ElementaryTestFnIntegrand,
    r: &TensorIntegrand,
    x: &dyn CylindricalSemimartingale,
    path: &CadlagPath,
    partition: &RandomPartition,
    obs: &[f64],
) -> Result<(Trajectory, Trajectory)> {
    let y = vector_integrate(r, x, path, partition, obs)?;
    let mut lhs = vec![0.0; obs.len()];
    for (hk, phi) in h.terms() {
        let (a0, coeffs) = hk.coefficients(path)?;
        let paired = y.pair_trajectory(phi)?;
        let y_at = |t: f64| paired.value(t);
        let y0 = y_at(0.0);
        for (o, &t) in lhs.iter_mut().zip(obs) {
            let mut acc = a0 * y0;
            for (i, a) in coeffs.iter().enumerate() {
                let (lo, hi) = (hk.times()[i], hk.times()[i + 1]);
                if t <= lo {
                    break;
                }
                acc += a * (y_at(t.min(hi)) - y_at(lo));
            }
            *o += acc;
        }
    }
    let lhs = Trajectory::new(obs.to_vec(), lhs)?;
    let rhs = riemann_scalar(&ComposedIntegrand { h, r }, x, path, partition, obs)?;
    Ok((lhs, rhs))
}

/// Successive-refinement diagnostics for `∫ R^{σ_n} dX`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannConvergenceReport {
    pub levels: Vec<u32>,
    /// Ensemble mean of `sup_t p'_r(Y^{n+1}_t - Y^n_t)`, one entry per
    /// consecutive pair of levels.
    pub mean_sup_difference: Vec<f64>,
    /// Empirical `P(sup_t p'_r(Y^{n+1}_t - Y^n_t) ≥ eps)` per pair.
    pub ucp_probability: Vec<f64>,
    /// Ensemble mean of `sup_t p'_r(Y^n_t - Y^ref_t)` against the finest
    /// level refined by the jump times.
    pub mean_sup_to_reference: Vec<f64>,
    /// Least-squares slope of `log₂ mean_sup_difference` against level.
    pub log2_slope: f64,
}

/// Evaluates `∫ R^{σ_n} dX` on dyadic partitions for each level and reports
/// how successive refinements contract.
#[allow(clippy::too_many_arguments)]
pub fn riemann_vector(
    r: &TensorIntegrand,
    x: &dyn CylindricalSemimartingale,
    paths: &[CadlagPath],
    levels: &[u32],
    r_level: i32,
    eps: f64,
    obs: &[f64],
) -> Result<RiemannConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two refinement levels".into(),
        ));
    }
    if paths.is_empty() {
        return Err(Error::InvalidInput("need at least one path".into()));
    }
    let horizon = paths[0].horizon();
    let finest = *levels.iter().max().unwrap();
    // per path: integrals at every level plus the jump-refined reference
    let per_path: Vec<(Vec<DistributionPath>, DistributionPath)> = paths
        .par_iter()
        .map(|path| {
            let ys = levels
                .iter()
                .map(|&l| vector_integrate(r, x, path, &RandomPartition::dyadic(l, horizon), obs))
                .collect::<Result<Vec<_>>>()?;
            let reference = vector_integrate(
                r,
                x,
                path,
                &RandomPartition::dyadic(finest, horizon).jump_refined(path),
                obs,
            )?;
            Ok((ys, reference))
        })
        .collect::<Result<Vec<_>>>()?;

    let count = per_path.len() as f64;
    let mut mean_sup_difference = Vec::new();
    let mut ucp_probability = Vec::new();
    for k in 0..levels.len() - 1 {
        let coarse: Vec<DistributionPath> = per_path.iter().map(|(ys, _)| ys[k].clone()).collect();
        let fine: Vec<DistributionPath> =
            per_path.iter().map(|(ys, _)| ys[k + 1].clone()).collect();
        let mut total = 0.0;
        for (a, b) in coarse.iter().zip(&fine) {
            total += sup_dual_distance(a, b, r_level, horizon)?;
        }
        mean_sup_difference.push(total / count);
        ucp_probability.push(ucp_dual_estimate(&coarse, &fine, r_level, horizon, eps)?);
    }
    let mut mean_sup_to_reference = Vec::new();
    for k in 0..levels.len() {
        let mut total = 0.0;
        for (ys, reference) in &per_path {
            total += sup_dual_distance(&ys[k], reference, r_level, horizon)?;
        }
        mean_sup_to_reference.push(total / count);
    }
    let xs: Vec<f64> = levels[..levels.len() - 1]
        .iter()
        .map(|&l| l as f64)
        .collect();
    let log2_slope = fit_log_slope(&xs, &mean_sup_difference, 2.0);
    Ok(RiemannConvergenceReport {
        levels: levels.to_vec(),
        mean_sup_difference,
        ucp_probability,
        mean_sup_to_reference,
        log2_slope,
    })
}
