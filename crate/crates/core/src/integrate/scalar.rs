//! Real-valued stochastic integrals `∫ H dX` of test-function-valued
//! integrands against cylindrical semimartingales.
//!
//! Integrands are read through [`History`], so a coefficient used on
//! `(t_i, t_{i+1}]` can only see the driver up to `t_i`.
//!
//! Sampling convention for Riemann sums: on `(τ_k, τ_{k+1}]` the integrand
//! takes the value it carries just after `τ_k` (`after`), which is
//! `F_{τ_k}`-measurable. For an elementary integrand this is the block
//! coefficient; for a functional of the driver it reads `z_{τ_k}`. The
//! `{0}` term uses `initial`, giving the `R(0)(X_0)` summand, so a constant
//! `φ` integrates to `<X_t, φ>`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hermite::TestFunction;
use crate::paths::{CadlagPath, RandomPartition};
use crate::trajectory::{History, ScalarPath, Trajectory};

pub type CoefficientFn = Arc<dyn Fn(&History<'_>) -> f64 + Send + Sync>;

/// Coefficient of an elementary block, evaluated on the history up to the
/// block's left endpoint.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Adapted(CoefficientFn),
}

impl Coefficient {
    pub fn adapted(f: impl Fn(&History<'_>) -> f64 + Send + Sync + 'static) -> Self {
        Self::Adapted(Arc::new(f))
    }

    pub fn eval(&self, hist: &History<'_>) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Adapted(f) => f(hist),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Adapted(_) => f.write_str("Adapted(..)"),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Self::Constant(c)
    }
}

/// `h = a_0 1_{0} + Σ_{i=1}^{n-1} a_i 1_{(t_i, t_{i+1}]}` with `|a_i| ≤ bound`.
#[derive(Debug, Clone)]
pub struct ElementaryScalarIntegrand {
    a0: Coefficient,
    times: Vec<f64>,
    coeffs: Vec<Coefficient>,
    bound: f64,
}

impl ElementaryScalarIntegrand {
    /// `times` are the block endpoints `t_1 < … < t_n` (`t_1 ≥ 0`) and
    /// `coeffs` the `n - 1` block coefficients.
    pub fn new(
        a0: Coefficient,
        times: Vec<f64>,
        coeffs: Vec<Coefficient>,
        bound: f64,
    ) -> Result<Self> {
        if bound.partial_cmp(&0.0) != Some(Ordering::Greater) {
            return Err(Error::InvalidInput("bound must be positive".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidInput(
                "block times must be finite and nonnegative".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(Error::InvalidInput(
                "block times must be strictly increasing".into(),
            ));
        }
        if coeffs.len() + 1 != times.len().max(1) {
            return Err(Error::InvalidInput(format!(
                "{} block times need {} coefficients, got {}",
                times.len(),
                times.len().saturating_sub(1),
                coeffs.len()
            )));
        }
        Ok(Self {
            a0,
            times,
            coeffs,
            bound,
        })
    }

    /// `h ≡ 0`.
    pub fn zero() -> Self {
        Self {
            a0: Coefficient::Constant(0.0),
            times: Vec::new(),
            coeffs: Vec::new(),
            bound: 1.0,
        }
    }

    /// `a_0 = c` and no blocks.
    pub fn initial_only(c: f64) -> Self {
        Self {
            a0: c.into(),
            times: Vec::new(),
            coeffs: Vec::new(),
            bound: c.abs().max(1.0),
        }
    }

    /// `value · 1_{(start, end]}`.
    pub fn indicator(start: f64, end: f64, value: f64) -> Result<Self> {
        Self::new(
            0.0.into(),
            vec![start, end],
            vec![value.into()],
            value.abs().max(1.0),
        )
    }

    /// `h ≡ c` on `{0} ∪ (0, T]`.
    pub fn constant(c: f64, horizon: f64) -> Result<Self> {
        Self::new(
            c.into(),
            vec![0.0, horizon],
            vec![c.into()],
            c.abs().max(1.0),
        )
    }

    /// Blocks on `k` uniform cells of `[0, T]` with the given coefficients.
    pub fn on_uniform_blocks(
        a0: Coefficient,
        horizon: f64,
        coeffs: Vec<Coefficient>,
        bound: f64,
    ) -> Result<Self> {
        let k = coeffs.len();
        let times = crate::paths::uniform_grid(horizon, k);
        Self::new(a0, times, coeffs, bound)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn scaled(&self, c: f64) -> Self {
        let scale = |a: &Coefficient| match a {
            Coefficient::Constant(v) => Coefficient::Constant(c * v),
            Coefficient::Adapted(f) => {
                let f = f.clone();
                Coefficient::adapted(move |h| c * f(h))
            }
        };
        Self {
            a0: scale(&self.a0),
            times: self.times.clone(),
            coeffs: self.coeffs.iter().map(scale).collect(),
            bound: self.bound * c.abs().max(f64::MIN_POSITIVE),
        }
    }

    /// Evaluates `(a_0, [a_1, …])` on `path`, checking the declared bound.
    pub fn coefficients(&self, path: &dyn ScalarPath) -> Result<(f64, Vec<f64>)> {
        let check = |block: usize, value: f64| {
            if value.abs() <= self.bound {
                Ok(value)
            } else {
                Err(Error::BoundViolation {
                    block,
                    value,
                    bound: self.bound,
                })
            }
        };
        let a0 = check(0, self.a0.eval(&History::new(path, 0.0)))?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&self.times)
            .enumerate()
            .map(|(i, (c, &t))| check(i + 1, c.eval(&History::new(path, t))))
            .collect::<Result<Vec<_>>>()?;
        Ok((a0, coeffs))
    }

    fn block_after(&self, now: f64) -> Option<usize> {
        let i = self.times.partition_point(|&t| t <= now).checked_sub(1)?;
        (i < self.coeffs.len()).then_some(i)
    }
}

/// Real predictable integrand read through a history view.
pub trait ScalarIntegrand: Send + Sync {
    /// Value on `{0}`.
    fn initial(&self, hist: &History<'_>) -> f64;
    /// Value on `(now, now + ε]`.
    fn after(&self, hist: &History<'_>) -> f64;
}

impl ScalarIntegrand for ElementaryScalarIntegrand {
    fn initial(&self, hist: &History<'_>) -> f64 {
        self.a0.eval(&hist.at(0.0))
    }

    fn after(&self, hist: &History<'_>) -> f64 {
        match self.block_after(hist.now()) {
            Some(i) => self.coeffs[i].eval(&hist.at(self.times[i])),
            None => 0.0,
        }
    }
}

impl<S: ScalarIntegrand + ?Sized> ScalarIntegrand for Arc<S> {
    fn initial(&self, hist: &History<'_>) -> f64 {
        (**self).initial(hist)
    }

    fn after(&self, hist: &History<'_>) -> f64 {
        (**self).after(hist)
    }
}

/// `t ↦ f(history up to t)`, e.g. a function of `z_t`. Unbounded functionals
/// are allowed; localize them before relying on bounds.
#[derive(Clone)]
pub struct AdaptedScalar(pub CoefficientFn);

impl AdaptedScalar {
    pub fn new(f: impl Fn(&History<'_>) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl ScalarIntegrand for AdaptedScalar {
    fn initial(&self, hist: &History<'_>) -> f64 {
        (self.0)(&hist.at(0.0))
    }

    fn after(&self, hist: &History<'_>) -> f64 {
        (self.0)(hist)
    }
}

/// Test-function-valued predictable integrand.
pub trait TestFnIntegrand: Send + Sync {
    fn truncation(&self) -> usize;
    fn initial(&self, hist: &History<'_>) -> TestFunction;
    fn after(&self, hist: &History<'_>) -> TestFunction;
}

/// `H ≡ φ`.
#[derive(Debug, Clone)]
pub struct ConstantTestFn(pub TestFunction);

impl TestFnIntegrand for ConstantTestFn {
    fn truncation(&self) -> usize {
        self.0.truncation()
    }

    fn initial(&self, _: &History<'_>) -> TestFunction {
        self.0.clone()
    }

    fn after(&self, _: &History<'_>) -> TestFunction {
        self.0.clone()
    }
}

/// `H(t) = f(history up to t)`.
#[derive(Clone)]
pub struct AdaptedTestFn {
    truncation: usize,
    f: Arc<dyn Fn(&History<'_>) -> TestFunction + Send + Sync>,
}

impl AdaptedTestFn {
    pub fn new(
        truncation: usize,
        f: impl Fn(&History<'_>) -> TestFunction + Send + Sync + 'static,
    ) -> Self {
        Self {
            truncation,
            f: Arc::new(f),
        }
    }
}

impl TestFnIntegrand for AdaptedTestFn {
    fn truncation(&self) -> usize {
        self.truncation
    }

    fn initial(&self, hist: &History<'_>) -> TestFunction {
        (self.f)(&hist.at(0.0))
    }

    fn after(&self, hist: &History<'_>) -> TestFunction {
        (self.f)(hist)
    }
}

/// `H(t, ω) = Σ_k h_k(t, ω) φ_k`.
#[derive(Debug, Clone)]
pub struct ElementaryTestFnIntegrand {
    truncation: usize,
    terms: Vec<(ElementaryScalarIntegrand, TestFunction)>,
}

impl ElementaryTestFnIntegrand {
    pub fn new(
        truncation: usize,
        terms: Vec<(ElementaryScalarIntegrand, TestFunction)>,
    ) -> Result<Self> {
        if let Some((_, phi)) = terms.iter().find(|(_, phi)| phi.truncation() != truncation) {
            return Err(Error::DimensionMismatch {
                expected: truncation,
                found: phi.truncation(),
            });
        }
        Ok(Self { truncation, terms })
    }

    pub fn single(h: ElementaryScalarIntegrand, phi: TestFunction) -> Self {
        Self {
            truncation: phi.truncation(),
            terms: vec![(h, phi)],
        }
    }

    pub fn zero(truncation: usize) -> Self {
        Self {
            truncation,
            terms: Vec::new(),
        }
    }

    pub fn terms(&self) -> &[(ElementaryScalarIntegrand, TestFunction)] {
        &self.terms
    }

    /// Union of all block endpoints.
    pub fn block_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|(h, _)| h.times().iter().copied())
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            truncation: self.truncation,
            terms: self
                .terms
                .iter()
                .map(|(h, phi)| (h.clone(), phi.scale(c)))
                .collect(),
        }
    }
}

impl TestFnIntegrand for ElementaryTestFnIntegrand {
    fn truncation(&self) -> usize {
        self.truncation
    }

    fn initial(&self, hist: &History<'_>) -> TestFunction {
        let mut out = TestFunction::zero(self.truncation);
        for (h, phi) in &self.terms {
            out.axpy(h.initial(hist), phi);
        }
        out
    }

    fn after(&self, hist: &History<'_>) -> TestFunction {
        let mut out = TestFunction::zero(self.truncation);
        for (h, phi) in &self.terms {
            let a = h.after(hist);
            if a != 0.0 {
                out.axpy(a, phi);
            }
        }
        out
    }
}

/// Multiplies an integrand by `1_{[0, τ]}` for the first passage `τ` of
/// `|z|` through `level` (or a deterministic time).
pub struct StoppedIntegrand<I> {
    pub inner: I,
    pub rule: StoppingRule,
}

/// Stopping times the probes and localizers use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    Deterministic(f64),
    FirstPassage(f64),
}

impl StoppingRule {
    /// The stopping time on `path`, capped at the horizon.
    pub fn time(&self, path: &dyn ScalarPath) -> f64 {
        match *self {
            Self::Deterministic(t) => t.min(path.horizon()),
            Self::FirstPassage(level) => path.first_passage(level).unwrap_or(path.horizon()),
        }
    }

    /// Whether `τ ≤ now` is already decided by the history.
    pub fn has_occurred(&self, hist: &History<'_>) -> bool {
        match *self {
            Self::Deterministic(t) => t <= hist.now(),
            Self::FirstPassage(level) => hist.first_passage(level).is_some(),
        }
    }
}

impl<I: TestFnIntegrand> TestFnIntegrand for StoppedIntegrand<I> {
    fn truncation(&self) -> usize {
        self.inner.truncation()
    }

    fn initial(&self, hist: &History<'_>) -> TestFunction {
        self.inner.initial(hist)
    }

    fn after(&self, hist: &History<'_>) -> TestFunction {
        if self.rule.has_occurred(hist) {
            TestFunction::zero(self.truncation())
        } else {
            self.inner.after(hist)
        }
    }
}

impl<I: ScalarIntegrand> ScalarIntegrand for StoppedIntegrand<I> {
    fn initial(&self, hist: &History<'_>) -> f64 {
        self.inner.initial(hist)
    }

    fn after(&self, hist: &History<'_>) -> f64 {
        if self.rule.has_occurred(hist) {
            0.0
        } else {
            self.inner.after(hist)
        }
    }
}

/// `X^τ` for a fixed time `τ`: pairings freeze at `τ`.
pub struct StoppedSemimartingale<X> {
    pub inner: X,
    pub tau: f64,
}

impl<X: CylindricalSemimartingale> CylindricalSemimartingale for StoppedSemimartingale<X> {
    fn truncation(&self) -> usize {
        self.inner.truncation()
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        if t > self.tau {
            self.inner.pair(path, self.tau, Side::Value, phi)
        } else {
            self.inner.pair(path, t, side, phi)
        }
    }
}

/// Which side of a càdlàg path to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Value,
    LeftLimit,
}

/// Weak description of a `Φ'`-valued semimartingale driven by a real path:
/// `φ ↦ <X_t, φ>` must be linear in `φ`.
pub trait CylindricalSemimartingale: Send + Sync {
    fn truncation(&self) -> usize;
    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64;

    /// The real semimartingale `<X, φ>` observed at `times`.
    fn paired_trajectory(
        &self,
        path: &CadlagPath,
        phi: &TestFunction,
        times: &[f64],
    ) -> Result<Trajectory> {
        Trajectory::from_fn(times, |t| self.pair(path, t, Side::Value, phi))
    }
}

impl<C: CylindricalSemimartingale + ?Sized> CylindricalSemimartingale for Arc<C> {
    fn truncation(&self) -> usize {
        (**self).truncation()
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        (**self).pair(path, t, side, phi)
    }
}

impl<C: CylindricalSemimartingale + ?Sized> CylindricalSemimartingale for &C {
    fn truncation(&self) -> usize {
        (**self).truncation()
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        (**self).pair(path, t, side, phi)
    }
}

/// `X + Y`.
pub struct SumSemimartingale<A, B>(pub A, pub B);

impl<A: CylindricalSemimartingale, B: CylindricalSemimartingale> CylindricalSemimartingale
    for SumSemimartingale<A, B>
{
    fn truncation(&self) -> usize {
        self.0.truncation()
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        self.0.pair(path, t, side, phi) + self.1.pair(path, t, side, phi)
    }
}

/// `X_t = z_t · D` for a fixed distribution `D`.
#[derive(Debug, Clone)]
pub struct ScaledDistribution(pub crate::hermite::Distribution);

impl CylindricalSemimartingale for ScaledDistribution {
    fn truncation(&self) -> usize {
        self.0.truncation()
    }

    fn pair(&self, path: &CadlagPath, t: f64, side: Side, phi: &TestFunction) -> f64 {
        let z = match side {
            Side::Value => path.value(t),
            Side::LeftLimit => path.left_limit(t),
        };
        z * crate::hermite::pair(&self.0, phi).expect("truncations agree")
    }
}

/// `a_0 y_0 + Σ a_i (y_{t_{i+1}∧t} - y_{t_i∧t})` at each observation time.
fn telescope(
    a0: f64,
    times: &[f64],
    coeffs: &[f64],
    y: impl Fn(f64) -> f64,
    obs: &[f64],
) -> Result<Trajectory> {
    let y0 = y(0.0);
    let block_ends: Vec<(f64, f64)> = times.iter().map(|&t| (t, y(t))).collect();
    let values = obs
        .iter()
        .map(|&t| {
            let mut acc = a0 * y0;
            for (i, &a) in coeffs.iter().enumerate() {
                let (lo, y_lo) = block_ends[i];
                if t <= lo {
                    break;
                }
                let (hi, y_hi) = block_ends[i + 1];
                let upper = if t >= hi { y_hi } else { y(t) };
                acc += a * (upper - y_lo);
            }
            acc
        })
        .collect();
    Trajectory::new(obs.to_vec(), values)
}

/// `(h·z)_t = a_0 z_0 + Σ a_i (z_{t_{i+1}∧t} - z_{t_i∧t})`, with the
/// coefficients read from the same path.
pub fn h_dot(
    h: &ElementaryScalarIntegrand,
    path: &dyn ScalarPath,
    obs: &[f64],
) -> Result<Trajectory> {
    let (a0, coeffs) = h.coefficients(path)?;
    telescope(a0, h.times(), &coeffs, |t| path.value(t), obs)
}

/// [`h_dot`] on a simulated driver.
pub fn h_dot_z(
    h: &ElementaryScalarIntegrand,
    path: &CadlagPath,
    obs: &[f64],
) -> Result<Trajectory> {
    h_dot(h, path, obs)
}

/// `Σ_k h_k · <X, φ_k>`, coefficients read from the driver.
pub fn integrate_elementary(
    integrand: &ElementaryTestFnIntegrand,
    x: &dyn CylindricalSemimartingale,
    path: &CadlagPath,
    obs: &[f64],
) -> Result<Trajectory> {
    if x.truncation() != integrand.truncation() {
        return Err(Error::DimensionMismatch {
            expected: x.truncation(),
            found: integrand.truncation(),
        });
    }
    let mut out = vec![0.0; obs.len()];
    for (h, phi) in integrand.terms() {
        let (a0, coeffs) = h.coefficients(path)?;
        let term = telescope(
            a0,
            h.times(),
            &coeffs,
            |t| x.pair(path, t, Side::Value, phi),
            obs,
        )?;
        for (o, v) in out.iter_mut().zip(term.values()) {
            *o += v;
        }
    }
    Trajectory::new(obs.to_vec(), out)
}

/// `<X_0, H(0)> + Σ_k <X_{τ_{k+1}∧t} - X_{τ_k∧t}, H(τ_k)>` at each
/// observation time.
pub fn riemann_scalar(
    integrand: &dyn TestFnIntegrand,
    x: &dyn CylindricalSemimartingale,
    path: &CadlagPath,
    partition: &RandomPartition,
    obs: &[f64],
) -> Result<Trajectory> {
    if x.truncation() != integrand.truncation() {
        return Err(Error::DimensionMismatch {
            expected: x.truncation(),
            found: integrand.truncation(),
        });
    }
    let h0 = integrand.initial(&History::new(path, 0.0));
    let base = x.pair(path, 0.0, Side::Value, &h0);

    // nonempty intervals (τ_k, τ_{k+1}] with the sampled integrand and the
    // left pairing value
    struct Cell {
        lo: f64,
        hi: f64,
        phi: TestFunction,
        x_lo: f64,
        full: f64,
    }
    let taus = partition.times();
    let mut cells = Vec::with_capacity(taus.len());
    for w in taus.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo == hi {
            continue;
        }
        let phi = integrand.after(&History::new(path, lo));
        let (x_lo, full) = if phi.is_zero() {
            (0.0, 0.0)
        } else {
            let x_lo = x.pair(path, lo, Side::Value, &phi);
            (x_lo, x.pair(path, hi, Side::Value, &phi) - x_lo)
        };
        cells.push(Cell {
            lo,
            hi,
            phi,
            x_lo,
            full,
        });
    }

    let mut values = Vec::with_capacity(obs.len());
    let mut done = base; // sum over cells with hi ≤ t
    let mut k = 0;
    for &t in obs {
        while k < cells.len() && cells[k].hi <= t {
            done += cells[k].full;
            k += 1;
        }
        let v = match cells.get(k) {
            Some(c) if c.lo < t && !c.phi.is_zero() => {
                done + (x.pair(path, t, Side::Value, &c.phi) - c.x_lo)
            }
            _ => done,
        };
        values.push(v);
    }
    Trajectory::new(obs.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::uniform_grid;
    use approx::assert_abs_diff_eq;

    fn drift_path() -> CadlagPath {
        CadlagPath::from_fn(1.0, 8, |t| t).unwrap()
    }

    /// `<X_t, φ> = z_t · φ_0`.
    fn linear_x(n: usize) -> ScaledDistribution {
        ScaledDistribution(crate::hermite::Distribution::basis(n, 0).unwrap())
    }

    #[test]
    fn single_block_gives_increment() {
        let path = CadlagPath::from_fn(1.0, 8, |t| 2.0 + t * t).unwrap();
        let h = ElementaryScalarIntegrand::indicator(0.0, 1.0, 1.0).unwrap();
        let obs = path.grid().to_vec();
        let out = h_dot_z(&h, &path, &obs).unwrap();
        for (&t, v) in obs.iter().zip(out.values()) {
            assert_abs_diff_eq!(*v, path.value(t) - path.value(0.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn initial_only_gives_z0() {
        let path = CadlagPath::from_fn(1.0, 8, |t| 3.0 + t).unwrap();
        let out = h_dot_z(
            &ElementaryScalarIntegrand::initial_only(1.0),
            &path,
            path.grid(),
        )
        .unwrap();
        assert!(out.values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn hand_telescoped_block() {
        let path = drift_path();
        let h = ElementaryScalarIntegrand::indicator(0.25, 0.75, 2.0).unwrap();
        let obs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let out = h_dot_z(&h, &path, &obs).unwrap();
        for (&t, v) in obs.iter().zip(out.values()) {
            let expected = if t > 0.25 {
                2.0 * (t.min(0.75) - t.min(0.25))
            } else {
                0.0
            };
            assert_abs_diff_eq!(*v, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn bound_violation_is_reported() {
        let h = ElementaryScalarIntegrand::new(
            0.0.into(),
            vec![0.0, 0.5, 1.0],
            vec![1.0.into(), Coefficient::adapted(|h| 10.0 * h.current())],
            1.0,
        )
        .unwrap();
        let path = drift_path();
        match h_dot_z(&h, &path, path.grid()) {
            Err(Error::BoundViolation { block: 2, .. }) => {}
            other => panic!("expected bound violation, got {other:?}"),
        }
    }

    #[test]
    fn coefficient_cannot_see_future() {
        // a_1 reads z at time 1 but only sees history up to t_1 = 0.5
        let h = ElementaryScalarIntegrand::new(
            0.0.into(),
            vec![0.5, 1.0],
            vec![Coefficient::adapted(|h| h.value(1.0))],
            10.0,
        )
        .unwrap();
        let (_, coeffs) = h.coefficients(&drift_path()).unwrap();
        assert_eq!(coeffs, vec![0.5]);
    }

    #[test]
    fn elementary_integral_of_constant_block() {
        let n = 4;
        let x = linear_x(n);
        let path = drift_path();
        let phi = TestFunction::basis(n, 0).unwrap();
        let h = ElementaryScalarIntegrand::indicator(0.0, 1.0, 1.0).unwrap();
        let integrand = ElementaryTestFnIntegrand::single(h, phi);
        let out = integrate_elementary(&integrand, &x, &path, path.grid()).unwrap();
        for (&t, v) in path.grid().iter().zip(out.values()) {
            assert_abs_diff_eq!(*v, t, epsilon = 1e-15);
        }
        let zero =
            integrate_elementary(&ElementaryTestFnIntegrand::zero(n), &x, &path, path.grid())
                .unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn riemann_constant_integrand_telescopes() {
        let n = 4;
        let x = linear_x(n);
        let path = CadlagPath::from_fn(1.0, 16, |t| 1.0 + (3.0 * t).sin()).unwrap();
        let phi = TestFunction::new(vec![2.0, 0.0, 1.0, 0.0]);
        let out = riemann_scalar(
            &ConstantTestFn(phi.clone()),
            &x,
            &path,
            &RandomPartition::dyadic(3, 1.0),
            path.grid(),
        )
        .unwrap();
        for (&t, v) in path.grid().iter().zip(out.values()) {
            assert_abs_diff_eq!(*v, x.pair(&path, t, Side::Value, &phi), epsilon = 1e-14);
        }
    }

    #[test]
    fn riemann_matches_elementary_when_aligned() {
        let n = 4;
        let x = linear_x(n);
        let path = CadlagPath::from_fn(1.0, 32, |t| (5.0 * t).cos()).unwrap();
        let h = ElementaryScalarIntegrand::new(
            0.5.into(),
            vec![0.25, 0.5, 0.75],
            vec![Coefficient::adapted(|h| h.current().tanh()), (-1.0).into()],
            1.0,
        )
        .unwrap();
        let integrand = ElementaryTestFnIntegrand::single(h, TestFunction::basis(n, 0).unwrap());
        let obs = uniform_grid(1.0, 32);
        let direct = integrate_elementary(&integrand, &x, &path, &obs).unwrap();
        let riemann = riemann_scalar(
            &integrand,
            &x,
            &path,
            &RandomPartition::dyadic(2, 1.0),
            &obs,
        )
        .unwrap();
        assert!(direct.max_deviation(&riemann).unwrap() < 1e-12);
    }

    #[test]
    fn stopped_integrand_vanishes_after_tau() {
        let n = 2;
        let x = linear_x(n);
        let path = drift_path();
        let inner = ConstantTestFn(TestFunction::basis(n, 0).unwrap());
        let stopped = StoppedIntegrand {
            inner,
            rule: StoppingRule::Deterministic(0.5),
        };
        let out = riemann_scalar(
            &stopped,
            &x,
            &path,
            &RandomPartition::dyadic(2, 1.0),
            path.grid(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.last(), 0.5, epsilon = 1e-15);
    }
}
