//! Dense complex linear algebra on a fixed N-dimensional fiber.
//!
//! [`Operator`] and [`StateVector`] are thin newtypes over `nalgebra` storage.
//! They validate finiteness on construction and are immutable afterwards.
//! [`MetricOperator`] additionally guarantees a Hermitian positive-definite
//! matrix, which is what a (possibly time-dependent) inner product
//! `<x|η y>` needs.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical tolerances shared by the whole library.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance, see [`is_hermitian`].
    pub herm: f64,
    /// Smallest admissible eigenvalue of a metric operator.
    pub pd: f64,
    pub exp: f64,
    pub sqrt: f64,
    pub unitary: f64,
    pub curvature: f64,
    /// Upper bound on the condition number of any matrix we invert.
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            pd: 1e-12,
            exp: 1e-12,
            sqrt: 1e-10,
            unitary: 1e-9,
            curvature: 1e-10,
            max_condition: 1e12,
        }
    }
}

impl Tolerances {
    /// All tolerances multiplied by `factor`; the condition-number guard is kept.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            herm: self.herm * factor,
            pd: self.pd * factor,
            exp: self.exp * factor,
            sqrt: self.sqrt * factor,
            unitary: self.unitary * factor,
            curvature: self.curvature * factor,
            max_condition: self.max_condition,
        }
    }
}

fn ensure_finite<'a>(mut values: impl Iterator<Item = &'a C64>, what: &str) -> Result<()> {
    if values.all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("{what} has non-finite entries")))
    }
}

/// A linear map on the N-dimensional fiber, stored as a dense N×N matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        ensure_finite(matrix.iter(), "operator")?;
        Ok(Self(matrix))
    }

    /// Builds an operator from row-major rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must all have length N".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        check_same_dim(self.dim(), other.dim(), "commutator")?;
        Ok(Self(&self.0 * &other.0 - &other.0 * &self.0))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_same_dim(self.dim(), psi.dim(), "operator application")?;
        Ok(StateVector(&self.0 * &psi.0))
    }

    /// Max-entry distance between two operators of equal dimension.
    pub fn max_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_diff on operators of different dimension");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Spectral condition number from the singular values.
    pub fn condition_number(&self) -> f64 {
        let sv = self.0.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Inverse guarded by a condition-number bound.
    pub fn inverse(&self, max_condition: f64) -> Result<Self> {
        let cond = self.condition_number();
        if !cond.is_finite() || cond > max_condition {
            return Err(Error::InvalidValue(format!(
                "matrix is ill-conditioned (condition number {cond:.3e})"
            )));
        }
        self.0
            .clone()
            .try_inverse()
            .map(Self)
            .ok_or_else(|| Error::InvalidValue("matrix is singular".into()))
    }

    /// ‖U†U − I‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let prod = self.0.adjoint() * &self.0;
        Operator(prod).max_diff(&Operator::identity(n))
    }
}

fn check_same_dim(a: usize, b: usize, context: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{context}: {a} vs {b}")))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// An N-component complex vector in the fixed space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(components: Vec<C64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Dimension("state vector must be non-empty".into()));
        }
        ensure_finite(components.iter(), "state vector")?;
        Ok(Self(DVector::from_vec(components)))
    }

    pub fn from_vector(v: DVector<C64>) -> Result<Self> {
        Self::new(v.as_slice().to_vec())
    }

    /// The k-th standard basis vector (0-based).
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::Dimension(format!("basis index {k} out of range for N={n}")));
        }
        let mut v = DVector::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self(self.0.map(|z| z / n)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn max_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_diff on vectors of different dimension");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl<'a> Add<&'a StateVector> for &'a StateVector {
    type Output = StateVector;
    fn add(self, rhs: &'a StateVector) -> StateVector {
        StateVector(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a StateVector> for &'a StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &'a StateVector) -> StateVector {
        StateVector(&self.0 - &rhs.0)
    }
}

/// Access to the Hermitian matrix defining a (pseudo-)inner product.
pub trait MetricLike {
    fn metric_op(&self) -> &Operator;
}

/// Hermitian positive-definite operator defining the inner product `<x|η y>`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricOperator {
    op: Operator,
}

impl MetricOperator {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, tol: &Tolerances) -> Result<Self> {
        if !is_hermitian(&op, tol.herm) {
            return Err(Error::NotHermitian("metric operator".into()));
        }
        let (values, _) = hermitian_eigen(&op);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= tol.pd {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest metric eigenvalue {min:.3e} <= {:.1e}",
                tol.pd
            )));
        }
        Ok(Self { op })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            op: Operator::identity(n),
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        let (values, _) = hermitian_eigen(&self.op);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }
}

impl MetricLike for MetricOperator {
    fn metric_op(&self) -> &Operator {
        &self.op
    }
}

/// Hermitian invertible but possibly indefinite metric. Only diagnostics such
/// as [`pseudo_adjoint`] accept it.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoMetric {
    op: Operator,
}

impl PseudoMetric {
    pub fn new(op: Operator, tol: &Tolerances) -> Result<Self> {
        if !is_hermitian(&op, tol.herm) {
            return Err(Error::NotHermitian("pseudo-metric operator".into()));
        }
        let (values, _) = hermitian_eigen(&op);
        if values.iter().any(|v| v.abs() <= tol.pd) {
            return Err(Error::SingularMetric("pseudo-metric has a zero eigenvalue".into()));
        }
        Ok(Self { op })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }
}

impl MetricLike for PseudoMetric {
    fn metric_op(&self) -> &Operator {
        &self.op
    }
}

/// Standard inner product `Σ conj(x_n) y_n`.
pub fn inner_product(x: &StateVector, y: &StateVector) -> Result<C64> {
    check_same_dim(x.dim(), y.dim(), "inner product")?;
    Ok(x.0.dotc(&y.0))
}

/// `<x | η y>`.
pub fn metric_inner_product(eta: &MetricOperator, x: &StateVector, y: &StateVector) -> Result<C64> {
    check_same_dim(eta.dim(), x.dim(), "metric inner product")?;
    let ey = eta.op.apply(y)?;
    inner_product(x, &ey)
}

pub fn adjoint(op: &Operator) -> Operator {
    op.adjoint()
}

/// Adjoint of `op` with respect to `<·, η ·>`, i.e. `η⁻¹ O† η`.
pub fn pseudo_adjoint(eta: &impl MetricLike, op: &Operator) -> Result<Operator> {
    pseudo_adjoint_with(eta, op, &Tolerances::default())
}

pub fn pseudo_adjoint_with(eta: &impl MetricLike, op: &Operator, tol: &Tolerances) -> Result<Operator> {
    let metric = eta.metric_op();
    check_same_dim(metric.dim(), op.dim(), "pseudo-adjoint")?;
    let inv = metric
        .inverse(tol.max_condition)
        .map_err(|e| Error::SingularMetric(e.to_string()))?;
    Ok(&(&inv * &op.adjoint()) * metric)
}

/// `‖O − O†‖_max ≤ tol·(1 + ‖O‖_max)`.
pub fn is_hermitian(op: &Operator, tol: f64) -> bool {
    hermiticity_defect(op) <= tol * (1.0 + op.max_abs())
}

/// `‖O − O†‖_max`.
pub fn hermiticity_defect(op: &Operator) -> f64 {
    op.max_diff(&op.adjoint())
}

/// `<ψ, Oψ>_η / <ψ, ψ>_η`, with η = I when `eta` is `None`.
pub fn expectation_value(op: &Operator, psi: &StateVector, eta: Option<&MetricOperator>) -> Result<C64> {
    check_same_dim(op.dim(), psi.dim(), "expectation value")?;
    let o_psi = op.apply(psi)?;
    let (num, den) = match eta {
        Some(eta) => (
            metric_inner_product(eta, psi, &o_psi)?,
            metric_inner_product(eta, psi, psi)?,
        ),
        None => (inner_product(psi, &o_psi)?, inner_product(psi, psi)?),
    };
    if den.re <= 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(num / den)
}

/// All N eigenvalues with multiplicity, sorted ascending by (real, imag).
pub fn eigenvalues(op: &Operator) -> Result<Vec<C64>> {
    let schur = Schur::try_new(op.0.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let values = schur
        .eigenvalues()
        .ok_or_else(|| Error::Eigen("Schur form is not triangular".into()))?;
    let mut values: Vec<C64> = values.iter().cloned().collect();
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(values)
}

/// Eigen-decomposition of the Hermitian part `(O + O†)/2`: ascending real
/// eigenvalues and the matching orthonormal eigenvector columns.
pub fn hermitian_eigen(op: &Operator) -> (Vec<f64>, DMatrix<C64>) {
    let sym = (&op.0 + op.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(op.dim(), op.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn matrix_exp(op: &Operator) -> Operator {
    Operator(op.0.exp())
}

/// Directional derivative of the exponential:
/// `d/ds exp(X + sE)|_{s=0}`, read off the upper-right block of
/// `exp([[X, E], [0, X]])`.
pub fn exp_frechet(x: &Operator, e: &Operator) -> Result<Operator> {
    check_same_dim(x.dim(), e.dim(), "exponential derivative")?;
    let n = x.dim();
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&x.0);
    block.view_mut((n, n), (n, n)).copy_from(&x.0);
    block.view_mut((0, n), (n, n)).copy_from(&e.0);
    let full = block.exp();
    Ok(Operator(full.view((0, n), (n, n)).into_owned()))
}

/// The unique positive-definite ρ with ρ² = η.
pub fn hermitian_sqrt(eta: &MetricOperator) -> Result<Operator> {
    hermitian_sqrt_with(eta.op(), &Tolerances::default())
}

/// Positive square root of a Hermitian matrix that is expected to be
/// positive-definite; fails if any eigenvalue is at or below `tol.pd`.
pub fn hermitian_sqrt_with(op: &Operator, tol: &Tolerances) -> Result<Operator> {
    let (values, vectors) = hermitian_eigen(op);
    if let Some(&min) = values.first() {
        if min <= tol.pd {
            return Err(Error::NotPositiveDefinite(format!(
                "eigenvalue {min:.3e} <= {:.1e}",
                tol.pd
            )));
        }
    }
    let roots = DVector::from_iterator(values.len(), values.iter().map(|v| C64::new(v.sqrt(), 0.0)));
    let rho = &vectors * DMatrix::from_diagonal(&roots) * vectors.adjoint();
    // Exact Hermiticity: round-off in the reconstruction breaks it at ~1e-16.
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    Ok(Operator(rho))
}

/// Spin matrices `(S_x, S_y, S_z)` in the standard (2s+1)-dimensional
/// representation, basis ordered by `m = s, s−1, …, −s`. `twice_spin` is 2s.
pub fn spin_matrices(twice_spin: usize) -> Result<[Operator; 3]> {
    if twice_spin == 0 {
        return Err(Error::InvalidValue("spin must be at least 1/2".into()));
    }
    let s = twice_spin as f64 / 2.0;
    let n = twice_spin + 1;
    let m = |k: usize| s - k as f64;
    // S_+ |m> = sqrt(s(s+1) − m(m+1)) |m+1>; row k−1 holds m+1 when column k holds m.
    let mut plus = DMatrix::<C64>::zeros(n, n);
    for k in 1..n {
        let mk = m(k);
        plus[(k - 1, k)] = C64::new((s * (s + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let sx = (&plus + &minus) * C64::new(0.5, 0.0);
    let sy = (&plus - &minus) * C64::new(0.0, -0.5);
    let sz = DMatrix::from_diagonal(&DVector::from_iterator(n, (0..n).map(|k| C64::new(m(k), 0.0))));
    Ok([Operator(sx), Operator(sy), Operator(sz)])
}

/// Pauli matrices `(σ_x, σ_y, σ_z)`.
pub fn pauli() -> [Operator; 3] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    [
        Operator(DMatrix::from_row_slice(2, 2, &[o, l, l, o])),
        Operator(DMatrix::from_row_slice(2, 2, &[o, -I, I, o])),
        Operator(DMatrix::from_row_slice(2, 2, &[l, o, o, -l])),
    ]
}

/// Seeded random draws used by property checks.
pub mod random {
    use rand::Rng;

    use super::*;

    fn entry(rng: &mut impl Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    pub fn complex_matrix(n: usize, rng: &mut impl Rng) -> Operator {
        Operator(DMatrix::from_fn(n, n, |_, _| entry(rng)))
    }

    pub fn hermitian(n: usize, rng: &mut impl Rng) -> Operator {
        let m = complex_matrix(n, rng).0;
        Operator((&m + m.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn state(n: usize, rng: &mut impl Rng) -> StateVector {
        StateVector(DVector::from_fn(n, |_, _| entry(rng)))
    }

    /// `exp(iK)` for a random Hermitian K.
    pub fn unitary(n: usize, rng: &mut impl Rng) -> Operator {
        matrix_exp(&hermitian(n, rng).scale(I))
    }

    /// `B†B + I`, always positive-definite with eigenvalues ≥ 1.
    pub fn positive(n: usize, rng: &mut impl Rng) -> Operator {
        let b = complex_matrix(n, rng).0;
        Operator(b.adjoint() * &b + DMatrix::identity(n, n))
    }

    /// `2I + B`: invertible with condition number bounded by a small constant
    /// for the entry range used here.
    pub fn invertible(n: usize, rng: &mut impl Rng) -> Operator {
        let b = complex_matrix(n, rng).0.map(|z| z / (n as f64));
        Operator(b + DMatrix::identity(n, n) * C64::new(2.0, 0.0))
    }
}
