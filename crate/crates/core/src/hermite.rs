//! Hermite-function model of the Schwartz space.
//!
//! The Hermite functions `h_j` form the eigenbasis of `L = -d²/dx² + x²`
//! with eigenvalues `λ_j = 2j + 1`. A test function is stored as its
//! truncated coefficient vector in this basis and a tempered distribution as
//! its values on the same basis functions, so the canonical pairing is a
//! plain dot product. The weighted inner products
//!
//! ```text
//! <φ, ψ>_r = Σ_j (1 + λ_j)^{2r} <φ, h_j> <ψ, h_j>
//! ```
//!
//! give the seminorm scale `‖·‖_r` of the space, and the dual seminorms
//! `p'_r(T)² = Σ_j (1 + λ_j)^{-2r} T(h_j)²`.
//!
//! Projections (`analyze`, `shift`) use a Gauss–Hermite rule whose weights
//! absorb the Gaussian factor, so that `∫ g(x) dx ≈ Σ_i w_i g(x_i)` for
//! `g = polynomial × e^{-x²}`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 64;
pub const DEFAULT_QUAD_ORDER: usize = 160;

/// `π^{-1/4}`, the value `h_0(0)`.
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Eigenvalue `λ_j = 2j + 1` of the harmonic oscillator.
#[inline]
pub fn eigenvalue(j: usize) -> f64 {
    (2 * j + 1) as f64
}

/// Fills `out[j] = h_j(x)` for `j < out.len()` by the normalized three-term
/// recurrence.
pub fn hermite_values_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let h0 = PI_POW_NEG_QUARTER * (-0.5 * x * x).exp();
    out[0] = h0;
    if out.len() == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * x * h0;
    for n in 1..out.len() - 1 {
        let k = n as f64;
        out[n + 1] = (2.0 / (k + 1.0)).sqrt() * x * out[n] - (k / (k + 1.0)).sqrt() * out[n - 1];
    }
}

/// `[h_0(x), …, h_{n-1}(x)]`.
pub fn hermite_values(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    hermite_values_into(x, &mut out);
    out
}

/// Evaluates `Σ_j c_j h_j(x)`, running the recurrence only as far as the
/// last nonzero coefficient.
pub fn eval_series(coeffs: &[f64], x: f64) -> f64 {
    let Some(last) = coeffs.iter().rposition(|&c| c != 0.0) else {
        return 0.0;
    };
    let mut prev = 0.0;
    let mut cur = PI_POW_NEG_QUARTER * (-0.5 * x * x).exp();
    let mut acc = coeffs[0] * cur;
    for n in 0..last {
        let k = n as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * x * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        acc += coeffs[n + 1] * cur;
    }
    acc
}

/// `(1 + λ_j)^{2r}` for integer `r`.
#[inline]
fn scale_weight(j: usize, r: i32) -> f64 {
    (1.0 + eigenvalue(j)).powi(2 * r)
}

/// Partial sum `Σ_{j<n} (1 + λ_j)^{-2β}` of the Hilbert–Schmidt series of
/// the canonical inclusions.
pub fn hs_partial_sum(beta: i32, n: usize) -> f64 {
    (0..n).map(|j| scale_weight(j, -beta)).sum()
}

/// Truncated Hermite coefficient vector of a test function.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    coeffs: Vec<f64>,
}

impl TestFunction {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            coeffs: vec![0.0; n],
        }
    }

    /// The basis vector `e_j`, i.e. the Hermite function `h_j` itself.
    pub fn basis(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        let mut coeffs = vec![0.0; n];
        coeffs[j] = 1.0;
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Point value `φ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        eval_series(&self.coeffs, x)
    }

    /// `‖φ‖_r = (Σ_j (1+λ_j)^{2r} c_j²)^{1/2}`.
    pub fn seminorm(&self, r: i32) -> f64 {
        self.inner_r(self, r).sqrt()
    }

    /// Weighted inner product `<φ, ψ>_r`. Panics on truncation mismatch.
    pub fn inner_r(&self, other: &Self, r: i32) -> f64 {
        assert_eq!(self.truncation(), other.truncation(), "truncation mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(j, (a, b))| scale_weight(j, r) * a * b)
            .sum()
    }

    /// Ladder-rule derivative. The contribution of `c_{N-1}` to `h_N` falls
    /// outside the truncation and is dropped.
    pub fn differentiate(&self) -> Self {
        let c = &self.coeffs;
        let n = c.len();
        let coeffs = (0..n)
            .map(|j| {
                let up = if j + 1 < n {
                    ((j + 1) as f64 / 2.0).sqrt() * c[j + 1]
                } else {
                    0.0
                };
                let down = if j > 0 {
                    (j as f64 / 2.0).sqrt() * c[j - 1]
                } else {
                    0.0
                };
                up - down
            })
            .collect();
        Self { coeffs }
    }

    /// The same function with its coefficient vector zero-padded to `len`.
    pub fn padded(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len.max(coeffs.len()), 0.0);
        Self { coeffs }
    }

    /// Position ladder `x·φ`, truncated like [`TestFunction::differentiate`].
    pub fn multiply_by_x(&self) -> Self {
        let c = &self.coeffs;
        let n = c.len();
        let coeffs = (0..n)
            .map(|j| {
                let up = if j + 1 < n {
                    ((j + 1) as f64 / 2.0).sqrt() * c[j + 1]
                } else {
                    0.0
                };
                let down = if j > 0 {
                    (j as f64 / 2.0).sqrt() * c[j - 1]
                } else {
                    0.0
                };
                up + down
            })
            .collect();
        Self { coeffs }
    }

    /// Keeps the first `n` coefficients and zeroes the rest (`P_n φ`).
    pub fn project(&self, n: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| if j < n { c } else { 0.0 })
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.truncation(), other.truncation(), "truncation mismatch");
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += a * o;
        }
    }
}

impl Add for &TestFunction {
    type Output = TestFunction;
    fn add(self, rhs: Self) -> TestFunction {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &TestFunction {
    type Output = TestFunction;
    fn sub(self, rhs: Self) -> TestFunction {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<&TestFunction> for f64 {
    type Output = TestFunction;
    fn mul(self, rhs: &TestFunction) -> TestFunction {
        rhs.scale(self)
    }
}

impl Neg for &TestFunction {
    type Output = TestFunction;
    fn neg(self) -> TestFunction {
        self.scale(-1.0)
    }
}

/// Tempered distribution given by its values `f_j = T(h_j)`.
///
/// `regularity` is the level `r₀` at which the dual seminorm is recorded,
/// i.e. `T` is treated as an element of the dual of the `‖·‖_{r₀}`
/// completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    dual_coeffs: Vec<f64>,
    regularity: i32,
}

impl Distribution {
    pub fn new(dual_coeffs: Vec<f64>) -> Self {
        Self {
            dual_coeffs,
            regularity: 0,
        }
    }

    pub fn with_regularity(dual_coeffs: Vec<f64>, regularity: i32) -> Self {
        Self {
            dual_coeffs,
            regularity,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    /// The functional `φ ↦ <φ, h_j>`.
    pub fn basis(n: usize, j: usize) -> Result<Self> {
        let e = TestFunction::basis(n, j)?;
        Ok(Self::new(e.coeffs))
    }

    /// The Dirac mass at `x`, truncated to `N` coefficients.
    pub fn dirac(n: usize, x: f64) -> Self {
        Self::new(hermite_values(x, n))
    }

    pub fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    pub fn truncation(&self) -> usize {
        self.dual_coeffs.len()
    }

    pub fn regularity(&self) -> i32 {
        self.regularity
    }

    /// `p'_r(T) = (Σ_j (1+λ_j)^{-2r} f_j²)^{1/2}`.
    pub fn dual_seminorm(&self, r: i32) -> f64 {
        self.dual_coeffs
            .iter()
            .enumerate()
            .map(|(j, f)| scale_weight(j, -r) * f * f)
            .sum::<f64>()
            .sqrt()
    }

    /// Dual seminorm at the recorded regularity level.
    pub fn recorded_seminorm(&self) -> f64 {
        self.dual_seminorm(self.regularity)
    }

    /// Distributional derivative: `T'(φ) = -T(φ')`.
    pub fn differentiate(&self) -> Self {
        let f = &self.dual_coeffs;
        let n = f.len();
        // T'(h_j) = -T(h_j') with h_j' = √(j/2) h_{j-1} - √((j+1)/2) h_{j+1}
        let dual_coeffs = (0..n)
            .map(|j| {
                let down = if j > 0 {
                    (j as f64 / 2.0).sqrt() * f[j - 1]
                } else {
                    0.0
                };
                let up = if j + 1 < n {
                    ((j + 1) as f64 / 2.0).sqrt() * f[j + 1]
                } else {
                    0.0
                };
                up - down
            })
            .collect();
        Self {
            dual_coeffs,
            regularity: self.regularity + 1,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            dual_coeffs: self.dual_coeffs.iter().map(|f| a * f).collect(),
            regularity: self.regularity,
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.truncation(), other.truncation(), "truncation mismatch");
        for (s, o) in self.dual_coeffs.iter_mut().zip(&other.dual_coeffs) {
            *s += a * o;
        }
        self.regularity = self.regularity.max(other.regularity);
    }
}

impl Add for &Distribution {
    type Output = Distribution;
    fn add(self, rhs: Self) -> Distribution {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Distribution {
    type Output = Distribution;
    fn sub(self, rhs: Self) -> Distribution {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

/// Canonical pairing `T(φ) = Σ_j f_j c_j`.
pub fn pair(t: &Distribution, phi: &TestFunction) -> Result<f64> {
    if t.truncation() != phi.truncation() {
        return Err(Error::DimensionMismatch {
            expected: t.truncation(),
            found: phi.truncation(),
        });
    }
    Ok(t.dual_coeffs
        .iter()
        .zip(&phi.coeffs)
        .map(|(f, c)| f * c)
        .sum())
}

/// Truncated Hermite basis with its Gauss–Hermite projection rule.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    truncation: usize,
    nodes: Vec<f64>,
    /// Weights for `∫ g dx`, i.e. the classical weights times `e^{x_i²}`.
    weights: Vec<f64>,
    /// `h_j(x_i)`, row-major by node.
    table: Vec<f64>,
}

impl Default for HermiteBasis {
    fn default() -> Self {
        Self::new(DEFAULT_TRUNCATION, DEFAULT_QUAD_ORDER)
            .expect("default basis parameters are valid")
    }
}

impl HermiteBasis {
    /// Builds the basis. Requires `quad_order ≥ 2·truncation` so products of
    /// retained functions are integrated exactly.
    pub fn new(truncation: usize, quad_order: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidInput("truncation must be positive".into()));
        }
        if quad_order < 2 * truncation {
            return Err(Error::InvalidInput(format!(
                "quadrature order {quad_order} must be at least twice the truncation {truncation}"
            )));
        }
        let (nodes, weights) = gauss_hermite_rule(quad_order);
        let mut table = vec![0.0; quad_order * truncation];
        for (row, &x) in table.chunks_mut(truncation).zip(&nodes) {
            hermite_values_into(x, row);
        }
        Ok(Self {
            truncation,
            nodes,
            weights,
            table,
        })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn quad_order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.truncation).map(eigenvalue).collect()
    }

    /// `h_n(x)` for `n` inside the truncation.
    pub fn eval_hermite(&self, n: usize, x: f64) -> Result<f64> {
        if n >= self.truncation {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.truncation,
            });
        }
        Ok(hermite_values(x, n + 1)[n])
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.table[i * self.truncation..(i + 1) * self.truncation]
    }

    /// Projects `f` onto `span{h_0, …, h_{N-1}}` by quadrature. Accuracy
    /// degrades for functions that are rough or poorly resolved by the rule.
    pub fn analyze(&self, f: impl Fn(f64) -> f64) -> TestFunction {
        let mut coeffs = vec![0.0; self.truncation];
        for (i, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let wf = w * f(x);
            if wf == 0.0 {
                continue;
            }
            for (c, h) in coeffs.iter_mut().zip(self.row(i)) {
                *c += wf * h;
            }
        }
        TestFunction::new(coeffs)
    }

    /// Projection of `x ↦ φ(x + a)`. `shift(φ, 0)` returns `φ` unchanged.
    pub fn shift(&self, phi: &TestFunction, a: f64) -> TestFunction {
        if a == 0.0 {
            return phi.clone();
        }
        self.analyze(|x| phi.eval(x + a))
    }

    /// `T ∗ δ_a` tested against `φ`, i.e. `T(φ(· + a))`.
    pub fn conv_pair(&self, t: &Distribution, a: f64, phi: &TestFunction) -> Result<f64> {
        pair(t, &self.shift(phi, a))
    }

    /// Precomputes the quadrature representation of `T` for repeated
    /// evaluation of `a ↦ T(φ(· + a))`.
    pub fn shift_kernel(&self, t: &Distribution) -> Result<ShiftKernel> {
        if t.truncation() != self.truncation {
            return Err(Error::DimensionMismatch {
                expected: self.truncation,
                found: t.truncation(),
            });
        }
        let mut node_weights = Vec::with_capacity(self.nodes.len());
        for (i, w) in self.weights.iter().enumerate() {
            let density: f64 = self
                .row(i)
                .iter()
                .zip(&t.dual_coeffs)
                .map(|(h, f)| h * f)
                .sum();
            node_weights.push(w * density);
        }
        // drop nodes that cannot contribute at double precision
        let peak = node_weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let keep: Vec<usize> = (0..node_weights.len())
            .filter(|&i| node_weights[i].abs() > peak * 1e-30)
            .collect();
        Ok(ShiftKernel {
            distribution: t.clone(),
            nodes: keep.iter().map(|&i| self.nodes[i]).collect(),
            node_weights: keep.iter().map(|&i| node_weights[i]).collect(),
        })
    }
}

/// Quadrature form of a fixed distribution `T`:
/// `T(ψ) ≈ Σ_i ŵ_i ψ(x_i)` with `ŵ_i = w_i Σ_j f_j h_j(x_i)`.
#[derive(Debug, Clone)]
pub struct ShiftKernel {
    distribution: Distribution,
    nodes: Vec<f64>,
    node_weights: Vec<f64>,
}

impl ShiftKernel {
    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    /// `T(φ(· + a))`; at `a = 0` this is exactly `pair(T, φ)`.
    ///
    /// `φ` may carry more coefficients than `T`; `T` vanishes on the extra
    /// basis functions.
    pub fn eval(&self, a: f64, phi: &TestFunction) -> f64 {
        if a == 0.0 {
            return self
                .distribution
                .dual_coeffs
                .iter()
                .zip(phi.coeffs())
                .map(|(f, c)| f * c)
                .sum();
        }
        self.nodes
            .iter()
            .zip(&self.node_weights)
            .map(|(&x, &w)| w * phi.eval(x + a))
            .sum()
    }

    /// `[T(h_0(· + a)), …, T(h_{N-1}(· + a))]`.
    pub fn basis_values(&self, a: f64) -> Vec<f64> {
        self.basis_values_to(a, self.distribution.truncation())
    }

    /// `[T(h_0(· + a)), …, T(h_{len-1}(· + a))]` for any `len`.
    pub fn basis_values_to(&self, a: f64, len: usize) -> Vec<f64> {
        if a == 0.0 {
            let mut out = self.distribution.dual_coeffs.clone();
            out.resize(len, 0.0);
            return out;
        }
        let mut out = vec![0.0; len];
        let mut h = vec![0.0; len];
        for (&x, &w) in self.nodes.iter().zip(&self.node_weights) {
            hermite_values_into(x + a, &mut h);
            for (o, v) in out.iter_mut().zip(&h) {
                *o += w * v;
            }
        }
        out
    }
}

/// Gauss–Hermite nodes and `e^{x²}`-scaled weights of order `q`.
///
/// Nodes start from the eigenvalues of the symmetric Jacobi matrix and are
/// polished by Newton steps on `h_q`; weights use `w̃_i = 1 / (q h_{q-1}(x_i)²)`.
fn gauss_hermite_rule(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(q, q);
    for k in 1..q {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(f64::total_cmp);

    let mut vals = vec![0.0; q + 1];
    let scale = (2.0 * q as f64).sqrt();
    let mut weights = Vec::with_capacity(q);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            hermite_values_into(*x, &mut vals);
            let (hq, hq1) = (vals[q], vals[q - 1]);
            let deriv = scale * hq1 - *x * hq;
            if deriv == 0.0 {
                break;
            }
            let step = hq / deriv;
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        hermite_values_into(*x, &mut vals);
        weights.push(1.0 / (q as f64 * vals[q - 1] * vals[q - 1]));
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn small_basis() -> HermiteBasis {
        HermiteBasis::new(40, 100).unwrap()
    }

    #[test]
    fn eval_hermite_closed_forms() {
        let basis = small_basis();
        assert_abs_diff_eq!(
            basis.eval_hermite(0, 0.0).unwrap(),
            PI.powf(-0.25),
            epsilon = 1e-15
        );
        assert_eq!(basis.eval_hermite(1, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            basis.eval_hermite(2, 0.0).unwrap(),
            -PI.powf(-0.25) / 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            basis.eval_hermite(2, 0.0).unwrap(),
            -0.531_125_9,
            epsilon = 1e-7
        );
    }

    #[test]
    fn eval_hermite_rejects_out_of_range() {
        let basis = small_basis();
        assert_eq!(
            basis.eval_hermite(40, 0.0),
            Err(Error::IndexOutOfRange { index: 40, len: 40 })
        );
    }

    #[test]
    fn basis_rejects_short_quadrature() {
        assert!(HermiteBasis::new(64, 100).is_err());
        assert!(HermiteBasis::new(0, 10).is_err());
    }

    #[test]
    fn quadrature_weights_integrate_gaussian() {
        let basis = small_basis();
        let total: f64 = basis
            .nodes()
            .iter()
            .zip(basis.weights())
            .map(|(x, w)| w * (-x * x).exp())
            .sum();
        assert_abs_diff_eq!(total, PI.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn analyze_recovers_basis_functions() {
        let basis = small_basis();
        let phi = basis.analyze(|x| hermite_values(x, 4)[0] + 2.0 * hermite_values(x, 4)[3]);
        let mut expected = vec![0.0; 40];
        expected[0] = 1.0;
        expected[3] = 2.0;
        for (c, e) in phi.coeffs().iter().zip(&expected) {
            assert_abs_diff_eq!(c, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn analyze_gaussian_times_x() {
        // x e^{-x²/2} = π^{1/4} √(1/2) h_1
        let basis = small_basis();
        let phi = basis.analyze(|x| x * (-0.5 * x * x).exp());
        assert_abs_diff_eq!(
            phi.coeffs()[1],
            PI.powf(0.25) / 2f64.sqrt(),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(phi.coeffs()[1], 0.9414, epsilon = 1e-4);
        for (j, c) in phi.coeffs().iter().enumerate() {
            if j != 1 {
                assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn seminorm_values() {
        let e0 = TestFunction::basis(8, 0).unwrap();
        let e1 = TestFunction::basis(8, 1).unwrap();
        assert_eq!(e0.seminorm(0), 1.0);
        assert_eq!(e0.seminorm(1), 2.0);
        assert_eq!(e1.seminorm(2), 16.0);
        assert_eq!(TestFunction::zero(8).seminorm(3), 0.0);
    }

    #[test]
    fn pairing_is_dot_product() {
        let n = 6;
        assert_eq!(
            pair(
                &Distribution::basis(n, 0).unwrap(),
                &TestFunction::basis(n, 0).unwrap()
            ),
            Ok(1.0)
        );
        assert_eq!(
            pair(
                &Distribution::basis(n, 0).unwrap(),
                &TestFunction::basis(n, 1).unwrap()
            ),
            Ok(0.0)
        );
        let f = Distribution::new(vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]);
        let phi = TestFunction::new(vec![0.5, 0.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(pair(&f, &phi), Ok(-2.5));
    }

    #[test]
    fn pairing_rejects_truncation_mismatch() {
        let f = Distribution::zero(4);
        let phi = TestFunction::zero(5);
        assert_eq!(
            pair(&f, &phi),
            Err(Error::DimensionMismatch {
                expected: 4,
                found: 5
            })
        );
    }

    #[test]
    fn zero_shift_is_identity() {
        let basis = small_basis();
        let phi = TestFunction::new((0..40).map(|j| 1.0 / (1.0 + j as f64)).collect());
        assert_eq!(basis.shift(&phi, 0.0), phi);
    }

    #[test]
    fn shift_of_ground_state() {
        let basis = small_basis();
        let e0 = TestFunction::basis(40, 0).unwrap();
        let shifted = basis.shift(&e0, 1.0);
        let expected = PI.powf(-0.25) * (-0.5f64).exp();
        assert_abs_diff_eq!(shifted.eval(0.0), expected, epsilon = 1e-6);
        assert_abs_diff_eq!(shifted.eval(0.0), 0.45558, epsilon = 1e-5);
    }

    #[test]
    fn shift_group_law() {
        let basis = small_basis();
        let e0 = TestFunction::basis(40, 0).unwrap();
        let twice = basis.shift(&basis.shift(&e0, 0.3), 0.4);
        let once = basis.shift(&e0, 0.7);
        for (a, b) in twice.coeffs().iter().zip(once.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn derivative_of_ground_state() {
        let e0 = TestFunction::basis(10, 0).unwrap();
        let d = e0.differentiate();
        assert_abs_diff_eq!(d.coeffs()[1], -(0.5f64).sqrt(), epsilon = 1e-15);
        // central differences on h_0
        for x in [-1.0, 0.0, 1.0] {
            let eps = 1e-5;
            let fd = (e0.eval(x + eps) - e0.eval(x - eps)) / (2.0 * eps);
            assert_abs_diff_eq!(d.eval(x), fd, epsilon = 1e-6);
        }
        assert!(TestFunction::zero(10).differentiate().is_zero());
    }

    #[test]
    fn conv_pair_gaussian_autocorrelation() {
        let basis = small_basis();
        let t = Distribution::basis(40, 0).unwrap();
        let e0 = TestFunction::basis(40, 0).unwrap();
        let v = basis.conv_pair(&t, 1.0, &e0).unwrap();
        assert_abs_diff_eq!(v, (-0.25f64).exp(), epsilon = 1e-10);
        let kernel = basis.shift_kernel(&t).unwrap();
        assert_abs_diff_eq!(kernel.eval(1.0, &e0), v, epsilon = 1e-13);
        assert_eq!(kernel.eval(0.0, &e0), 1.0);
    }

    #[test]
    fn kernel_basis_values_match_conv_pair() {
        let basis = small_basis();
        let t = Distribution::new((0..40).map(|j| (-(j as f64) / 4.0).exp()).collect());
        let kernel = basis.shift_kernel(&t).unwrap();
        let values = kernel.basis_values(0.37);
        for j in [0, 3, 11, 25] {
            let e = TestFunction::basis(40, j).unwrap();
            assert_abs_diff_eq!(
                values[j],
                basis.conv_pair(&t, 0.37, &e).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn distribution_derivative_is_adjoint() {
        let t = Distribution::new((0..12).map(|j| (j as f64 * 0.7).sin()).collect());
        let phi = TestFunction::new(
            (0..12)
                .map(|j| if j < 10 { (j as f64).cos() } else { 0.0 })
                .collect(),
        );
        let lhs = pair(&t.differentiate(), &phi).unwrap();
        let rhs = -pair(&t, &phi.differentiate()).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn dirac_pairs_to_point_value() {
        let phi = TestFunction::new(vec![0.2, -0.4, 0.1, 0.7, 0.0, 0.0]);
        let delta = Distribution::dirac(6, 0.8);
        assert_abs_diff_eq!(pair(&delta, &phi).unwrap(), phi.eval(0.8), epsilon = 1e-15);
    }
}
