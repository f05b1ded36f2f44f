//! Falsification probes for the good-integrator property and the pathwise
//! identities of the stochastic integral.
//!
//! Exact probes compare two computations of the same quantity and pass when
//! the deviation is at most [`EXACT_TOLERANCE`]. Convergence probes tabulate
//! Émery lower bounds and UCP estimates along a sequence `H_k → 0`; they can
//! only ever report behaviour *consistent with* the property, or a
//! violation.

use std::fmt;

use rayon::prelude::*;

use crate::error::Result;
use crate::hermite::{Distribution, TestFunction};
use crate::integrate::scalar::{
    integrate_elementary, AdaptedScalar, CylindricalSemimartingale, ElementaryScalarIntegrand,
    ElementaryTestFnIntegrand, StoppedSemimartingale, StoppingRule, SumSemimartingale,
};
use crate::integrate::vector::{
    integrate_then_integrate, localize_integrate, vector_integrate, LocalizedIntegrand,
    TensorIntegrand,
};
use crate::metrics::{r_em_estimate, r_ucp_estimate, IntegrandDictionary, ProcessEnsemble};
use crate::paths::{merge_sorted, stop_path, CadlagPath, RandomPartition};

pub const EXACT_TOLERANCE: f64 = 1e-10;

/// One exact-identity comparison, with the largest deviation over paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCase {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl ProbeCase {
    pub fn new(name: impl Into<String>, deviation: f64) -> Self {
        Self {
            name: name.into(),
            deviation,
            tolerance: EXACT_TOLERANCE,
        }
    }

    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub index: usize,
    pub emery_lower_bound: f64,
    pub emery_std_error: f64,
    pub ucp_estimate: f64,
    pub ucp_std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ConsistentWith,
    Violates,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConsistentWith => f.write_str("consistent with"),
            Self::Violates => f.write_str("violates"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub probe: String,
    pub cases: Vec<ProbeCase>,
    pub table: Vec<ConvergenceRow>,
    pub verdict: Verdict,
}

impl ProbeReport {
    fn exact(probe: &str, cases: Vec<ProbeCase>) -> Self {
        let verdict = if cases.iter().all(ProbeCase::passed) {
            Verdict::ConsistentWith
        } else {
            Verdict::Violates
        };
        Self {
            probe: probe.into(),
            cases,
            table: Vec::new(),
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::ConsistentWith
    }

    pub fn max_deviation(&self) -> f64 {
        self.cases.iter().fold(0.0, |m, c| m.max(c.deviation))
    }

    /// Plain-text PASS/FAIL lines, one per case, then the verdict.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .cases
            .iter()
            .map(|c| {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                format!(
                    "{status} {}/{}: deviation {:.3e} (tolerance {:.0e})",
                    self.probe, c.name, c.deviation, c.tolerance
                )
            })
            .collect();
        for row in &self.table {
            lines.push(format!(
                "     {}/k={}: emery_lower_bound {:.6e} ± {:.1e}, ucp {:.6e} ± {:.1e}",
                self.probe,
                row.index,
                row.emery_lower_bound,
                row.emery_std_error,
                row.ucp_estimate,
                row.ucp_std_error
            ));
        }
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let subject = if self.table.is_empty() {
            "the pathwise identity"
        } else {
            "the good-integrator property"
        };
        lines.push(format!(
            "{status} {}: {} {subject}",
            self.probe, self.verdict
        ));
        lines
    }
}

fn dyadic_with(level: u32, path: &CadlagPath, extra: &[f64]) -> RandomPartition {
    RandomPartition::dyadic(level, path.horizon())
        .jump_refined(path)
        .refine(extra)
}

fn observation_times(path: &CadlagPath, sigma: &RandomPartition) -> Vec<f64> {
    let mut times = sigma.times().to_vec();
    times.dedup();
    merge_sorted(&times, &path.event_times())
}

fn max_over<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<f64> + Send + Sync) -> Result<f64> {
    let devs = items.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// `(∫R dX)^τ`, `∫R 1_{[0,τ]} dX` and `∫R dX^τ`, compared pathwise with `τ`
/// added to a jump-refined dyadic partition.
pub fn stopping_probe(
    x: &dyn CylindricalSemimartingale,
    integrands: &[(String, TensorIntegrand)],
    rules: &[StoppingRule],
    paths: &[CadlagPath],
    level: u32,
) -> Result<ProbeReport> {
    let mut cases = Vec::new();
    for (name, r) in integrands {
        for rule in rules {
            let stopped_r = r.stopped(*rule);
            let deviation = max_over(paths, |path| {
                let tau = rule.time(path);
                let sigma = dyadic_with(level, path, &[tau]);
                let obs = observation_times(path, &sigma);
                let full = vector_integrate(r, x, path, &sigma, &obs)?.stopped(tau);
                let by_integrand = vector_integrate(&stopped_r, x, path, &sigma, &obs)?;
                let by_driver = vector_integrate(
                    r,
                    &StoppedSemimartingale { inner: x, tau },
                    path,
                    &sigma,
                    &obs,
                )?;
                Ok(full
                    .max_deviation(&by_integrand)?
                    .max(full.max_deviation(&by_driver)?))
            })?;
            cases.push(ProbeCase::new(
                format!("{name}@{}", rule_label(rule)),
                deviation,
            ));
        }
    }
    Ok(ProbeReport::exact("stopping", cases))
}

fn rule_label(rule: &StoppingRule) -> String {
    match rule {
        StoppingRule::Deterministic(t) => format!("t={t}"),
        StoppingRule::FirstPassage(l) => format!("hit={l}"),
    }
}

/// Settings shared by the convergence probe's Monte-Carlo estimates.
#[derive(Debug, Clone)]
pub struct ContinuitySettings {
    pub dictionary: IntegrandDictionary,
    pub n_max: usize,
    pub threshold: f64,
}

/// Tabulates Émery lower bounds and UCP estimates of `∫H_k dX` along a
/// sequence meant to tend to zero. The sequence passes when both columns
/// decrease up to twice their standard errors and end below `threshold`.
pub fn continuity_probe(
    x: &dyn CylindricalSemimartingale,
    sequence: &[ElementaryTestFnIntegrand],
    paths: &[CadlagPath],
    obs: &[f64],
    settings: &ContinuitySettings,
) -> Result<ProbeReport> {
    let mut table = Vec::with_capacity(sequence.len());
    for (k, h) in sequence.iter().enumerate() {
        let integrals = paths
            .par_iter()
            .map(|p| integrate_elementary(h, x, p, obs))
            .collect::<Result<Vec<_>>>()?;
        let emery = r_em_estimate(&integrals, &settings.dictionary, settings.n_max, obs)?;
        let ucp = r_ucp_estimate(&ProcessEnsemble::new(integrals)?, settings.n_max)?;
        table.push(ConvergenceRow {
            index: k + 1,
            emery_lower_bound: emery.estimate.value,
            emery_std_error: emery.estimate.std_error,
            ucp_estimate: ucp.value,
            ucp_std_error: ucp.std_error,
        });
    }
    let decreasing = |v: fn(&ConvergenceRow) -> (f64, f64)| {
        table.windows(2).all(|w| {
            let ((a, sa), (b, sb)) = (v(&w[0]), v(&w[1]));
            b <= a + 2.0 * sa.max(sb)
        })
    };
    let monotone = decreasing(|r| (r.emery_lower_bound, r.emery_std_error))
        && decreasing(|r| (r.ucp_estimate, r.ucp_std_error));
    let small = table
        .last()
        .is_none_or(|r| r.emery_lower_bound.max(r.ucp_estimate) < settings.threshold);
    let verdict = if monotone && small {
        Verdict::ConsistentWith
    } else {
        Verdict::Violates
    };
    Ok(ProbeReport {
        probe: "continuity".into(),
        cases: Vec::new(),
        table,
        verdict,
    })
}

/// Checks `<X^{τ_n}, φ> = <X, φ>^{τ_n}` for every level and probe function,
/// and that pasting the localized integral reproduces the direct integral
/// on paths whose levels exhaust the horizon. Returns the report and the
/// number of paths used for the pasting comparison.
pub fn localization_probe(
    x: &dyn CylindricalSemimartingale,
    localized: &LocalizedIntegrand,
    direct: &TensorIntegrand,
    probes: &[(String, TestFunction)],
    paths: &[CadlagPath],
    level: u32,
) -> Result<(ProbeReport, usize)> {
    let mut cases = Vec::new();
    for (name, phi) in probes {
        for rule in &localized.levels {
            let deviation = max_over(paths, |path| {
                let tau = rule.time(path);
                let obs = observation_times(path, &dyadic_with(level, path, &[tau]));
                let stopped_x = StoppedSemimartingale { inner: x, tau };
                let lhs = stopped_x.paired_trajectory(path, phi, &obs)?;
                let rhs = x.paired_trajectory(path, phi, &obs)?.stopped(tau);
                let on_stopped_path = x.paired_trajectory(&stop_path(path, tau), phi, &obs)?;
                Ok(lhs
                    .max_deviation(&rhs)?
                    .max(lhs.max_deviation(&on_stopped_path)?))
            })?;
            cases.push(ProbeCase::new(
                format!("stopped-pairing/{name}@{}", rule_label(rule)),
                deviation,
            ));
        }
    }
    let horizon_reached: Vec<&CadlagPath> = paths
        .iter()
        .filter(|p| {
            localized
                .stopping_times(p)
                .last()
                .is_some_and(|&t| t >= p.horizon())
        })
        .collect();
    let deviation = max_over(&horizon_reached, |path| {
        let sigma = dyadic_with(level, path, &[]);
        let obs = observation_times(path, &sigma);
        let pasted = localize_integrate(localized, x, path, &sigma, &obs)?;
        let plain = vector_integrate(direct, x, path, &sigma, &obs)?;
        pasted.max_deviation(&plain)
    })?;
    cases.push(ProbeCase::new("pasting", deviation));
    Ok((
        ProbeReport::exact("localization", cases),
        horizon_reached.len(),
    ))
}

/// `∫(cR+S)dX` against `c∫R dX + ∫S dX`, and `∫R d(X+Y)` against
/// `∫R dX + ∫R dY`, coefficientwise on a common partition.
#[allow(clippy::too_many_arguments)]
pub fn linearity_probe(
    x: &dyn CylindricalSemimartingale,
    y: &dyn CylindricalSemimartingale,
    r: &TensorIntegrand,
    s: &TensorIntegrand,
    scalars: &[f64],
    paths: &[CadlagPath],
    level: u32,
) -> Result<ProbeReport> {
    let mut cases = Vec::new();
    for &c in scalars {
        let combined = r.scaled(c).plus(s)?;
        let deviation = max_over(paths, |path| {
            let sigma = dyadic_with(level, path, &[]);
            let obs = observation_times(path, &sigma);
            let lhs = vector_integrate(&combined, x, path, &sigma, &obs)?;
            let rhs = vector_integrate(r, x, path, &sigma, &obs)?.combine(
                c,
                &vector_integrate(s, x, path, &sigma, &obs)?,
                1.0,
            )?;
            lhs.max_deviation(&rhs)
        })?;
        cases.push(ProbeCase::new(format!("integrand c={c}"), deviation));
    }
    let deviation = max_over(paths, |path| {
        let sigma = dyadic_with(level, path, &[]);
        let obs = observation_times(path, &sigma);
        let lhs = vector_integrate(r, &SumSemimartingale(x, y), path, &sigma, &obs)?;
        let rhs = vector_integrate(r, x, path, &sigma, &obs)?.combine(
            1.0,
            &vector_integrate(r, y, path, &sigma, &obs)?,
            1.0,
        )?;
        lhs.max_deviation(&rhs)
    })?;
    cases.push(ProbeCase::new("integrator", deviation));
    Ok(ProbeReport::exact("linearity", cases))
}

/// `∫H dY` against `∫R'(H) dX` with `Y = ∫R dX`, `H`'s blocks aligned with
/// the partition.
pub fn associativity_probe(
    x: &dyn CylindricalSemimartingale,
    cases_in: &[(String, ElementaryTestFnIntegrand, TensorIntegrand)],
    paths: &[CadlagPath],
    level: u32,
) -> Result<ProbeReport> {
    let mut cases = Vec::new();
    for (name, h, r) in cases_in {
        let deviation = max_over(paths, |path| {
            let sigma = dyadic_with(level, path, &h.block_times());
            let obs = observation_times(path, &sigma);
            let (lhs, rhs) = integrate_then_integrate(h, r, x, path, &sigma, &obs)?;
            lhs.max_deviation(&rhs)
        })?;
        cases.push(ProbeCase::new(name.clone(), deviation));
    }
    Ok(ProbeReport::exact("associativity", cases))
}

/// Named probe sets, so reports are comparable across runs.
pub mod presets {
    use super::*;
    use std::sync::Arc;

    /// `e_0`, `e_1`, `e_0 - e_2/2` and a decaying mixture.
    pub fn test_functions(n: usize) -> Vec<(String, TestFunction)> {
        let e = |j: usize| TestFunction::basis(n, j.min(n - 1)).expect("index clamped");
        let mixture = TestFunction::new(
            (0..n)
                .map(|j| ((j + 1) as f64).powi(-2) * if j % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        );
        vec![
            ("e0".into(), e(0)),
            ("e1".into(), e(1)),
            ("e0-e2/2".into(), &e(0) - &e(2).scale(0.5)),
            ("mixture".into(), mixture),
        ]
    }

    /// `1/(1+j)` dual coefficients.
    pub fn harmonic_distribution(n: usize) -> Distribution {
        Distribution::new((0..n).map(|j| 1.0 / (1.0 + j as f64)).collect())
    }

    /// Rank-one constant, rank-one elementary and rank-two adapted
    /// integrands.
    pub fn tensor_integrands(n: usize, horizon: f64) -> Result<Vec<(String, TensorIntegrand)>> {
        let tests = test_functions(n);
        let constant = TensorIntegrand::rank_one(
            ElementaryScalarIntegrand::constant(1.0, horizon)?,
            tests[0].1.clone(),
            Distribution::basis(n, 0)?,
        )?;
        let blocks = ElementaryScalarIntegrand::new(
            0.5.into(),
            vec![0.0, 0.25 * horizon, 0.5 * horizon, horizon],
            vec![
                1.0.into(),
                crate::integrate::scalar::Coefficient::adapted(|h| h.current().tanh()),
                (-0.5).into(),
            ],
            1.0,
        )?;
        let elementary =
            TensorIntegrand::rank_one(blocks, tests[2].1.clone(), harmonic_distribution(n))?;
        let adapted = TensorIntegrand::new(
            n,
            vec![
                crate::integrate::vector::TensorTerm {
                    h: Arc::new(AdaptedScalar::new(|h| h.current().sin())),
                    test: tests[1].1.clone(),
                    dist: Distribution::basis(n, 1)?,
                },
                crate::integrate::vector::TensorTerm {
                    h: Arc::new(AdaptedScalar::new(|h| {
                        1.0 / (1.0 + h.current() * h.current())
                    })),
                    test: tests[3].1.clone(),
                    dist: harmonic_distribution(n),
                },
            ],
        )?;
        Ok(vec![
            ("constant".into(), constant),
            ("elementary".into(), elementary),
            ("rank-two".into(), adapted),
        ])
    }

    /// `T`, `0`, `T/2` and first passage of `|z|` through 1.
    pub fn stopping_rules(horizon: f64) -> Vec<StoppingRule> {
        vec![
            StoppingRule::Deterministic(horizon),
            StoppingRule::Deterministic(0.0),
            StoppingRule::Deterministic(0.5 * horizon),
            StoppingRule::FirstPassage(1.0),
        ]
    }

    /// Shrinking sequences for the continuity probe.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Shrinking {
        /// `H_k = (1/k) 1_{(0,T]} e_0`.
        Scaled,
        /// `H_k = 1_{(0, T/k]} e_0`.
        Window,
        /// `H_k = 0`.
        Zero,
    }

    pub fn shrinking_sequence(
        kind: Shrinking,
        n: usize,
        horizon: f64,
        k_max: usize,
    ) -> Result<Vec<ElementaryTestFnIntegrand>> {
        let e0 = TestFunction::basis(n, 0)?;
        (1..=k_max)
            .map(|k| {
                let kf = k as f64;
                Ok(match kind {
                    Shrinking::Scaled => ElementaryTestFnIntegrand::single(
                        ElementaryScalarIntegrand::indicator(0.0, horizon, 1.0 / kf)?,
                        e0.clone(),
                    ),
                    Shrinking::Window => ElementaryTestFnIntegrand::single(
                        ElementaryScalarIntegrand::indicator(0.0, horizon / kf, 1.0)?,
                        e0.clone(),
                    ),
                    Shrinking::Zero => ElementaryTestFnIntegrand::zero(n),
                })
            })
            .collect()
    }

    /// `R = clamp(z, ±L)·(e_1 ⊗ dual e_0)` localized by first passage through
    /// each level, and its unbounded direct form `z·(e_1 ⊗ dual e_0)`.
    pub fn localized_linear(
        n: usize,
        levels: &[f64],
    ) -> Result<(LocalizedIntegrand, TensorIntegrand)> {
        let test = TestFunction::basis(n, 1)?;
        let dist = Distribution::basis(n, 0)?;
        let (t2, d2) = (test.clone(), dist.clone());
        let localized = LocalizedIntegrand::new(
            move |rule| {
                let bound = match *rule {
                    StoppingRule::FirstPassage(l) => l,
                    StoppingRule::Deterministic(_) => f64::INFINITY,
                };
                TensorIntegrand::rank_one(
                    AdaptedScalar::new(move |h| h.current().clamp(-bound, bound)),
                    t2.clone(),
                    d2.clone(),
                )
                .expect("truncations agree")
            },
            levels
                .iter()
                .map(|&l| StoppingRule::FirstPassage(l))
                .collect(),
        );
        let direct = TensorIntegrand::rank_one(AdaptedScalar::new(|h| h.current()), test, dist)?;
        Ok((localized, direct))
    }

    /// Aligned elementary `H` paired with the preset tensor integrands.
    pub fn associativity_cases(
        n: usize,
        horizon: f64,
    ) -> Result<Vec<(String, ElementaryTestFnIntegrand, TensorIntegrand)>> {
        let tests = test_functions(n);
        let h = ElementaryTestFnIntegrand::new(
            n,
            vec![
                (
                    ElementaryScalarIntegrand::indicator(0.0, horizon, 1.0)?,
                    tests[0].1.clone(),
                ),
                (
                    ElementaryScalarIntegrand::new(
                        0.25.into(),
                        vec![0.0, 0.5 * horizon, horizon],
                        vec![
                            crate::integrate::scalar::Coefficient::adapted(|h| h.current().cos()),
                            (-1.0).into(),
                        ],
                        1.0,
                    )?,
                    tests[3].1.clone(),
                ),
            ],
        )?;
        Ok(tensor_integrands(n, horizon)?
            .into_iter()
            .map(|(name, r)| (name, h.clone(), r))
            .collect())
    }
}
