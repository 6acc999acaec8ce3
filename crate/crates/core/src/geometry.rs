//! Gauge fields over a single parameter chart.
//!
//! A [`GaugeField`] assigns to each point `R` of the chart `d` operators
//! `A_a[R]`, the components of the local connection one-form
//! `A = Σ_a dR_a A_a`. Gauge transformations are unitary-valued functions
//! `𝒢[R]`; they act on connections passively,
//! `Ã_a = 𝒢⁻¹ A_a 𝒢 − i 𝒢⁻¹ ∂_a 𝒢`, or actively,
//! `Ǎ_a = 𝒢 A_a 𝒢⁻¹ + i (∂_a 𝒢) 𝒢⁻¹`.
//!
//! Coordinate indices are 0-based throughout.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{exp_frechet, hermiticity_defect, matrix_exp, spin_matrices, Operator, Tolerances, I};

/// Default central-difference step, relative to `1 + |R_b|`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

pub const DEFAULT_CHART: &str = "main";

/// Coordinates of a point in a parameter chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPoint {
    coords: Vec<f64>,
    chart_id: String,
}

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::in_chart(coords, DEFAULT_CHART)
    }

    pub fn in_chart(coords: Vec<f64>, chart_id: impl Into<String>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension("parameter point needs at least one coordinate".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue("parameter coordinates must be finite".into()));
        }
        Ok(Self {
            coords,
            chart_id: chart_id.into(),
        })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn chart_id(&self) -> &str {
        &self.chart_id
    }

    fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut coords = self.coords.clone();
        coords[index] += delta;
        Self {
            coords,
            chart_id: self.chart_id.clone(),
        }
    }
}

/// A coordinate chart: an open box in `ℝ^d`. Only one chart is used per
/// field; `id` lets points declare which chart their coordinates refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: String,
    pub bounds: Vec<(f64, f64)>,
}

impl Chart {
    pub fn unbounded(d: usize) -> Self {
        Self {
            id: DEFAULT_CHART.into(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); d],
        }
    }

    pub fn contains(&self, point: &ParameterPoint) -> bool {
        point.chart_id == self.id
            && point.coords.len() == self.bounds.len()
            && point
                .coords
                .iter()
                .zip(&self.bounds)
                .all(|(x, (lo, hi))| x > lo && x < hi)
    }

    fn check(&self, point: &ParameterPoint) -> Result<()> {
        if point.chart_id != self.id {
            return Err(Error::ChartDomain(format!(
                "point belongs to chart `{}`, field is defined on `{}`",
                point.chart_id, self.id
            )));
        }
        if point.coords.len() != self.bounds.len() {
            return Err(Error::Dimension(format!(
                "parameter point has {} coordinates, chart has {}",
                point.coords.len(),
                self.bounds.len()
            )));
        }
        if !self.contains(point) {
            return Err(Error::ChartDomain(format!("{:?} lies outside {:?}", point.coords, self.bounds)));
        }
        Ok(())
    }
}

pub type ComponentFn = Arc<dyn Fn(usize, &[f64]) -> Result<Operator> + Send + Sync>;
/// `(a, b, R) ↦ ∂_b A_a[R]`.
pub type ComponentPartialFn = Arc<dyn Fn(usize, usize, &[f64]) -> Result<Operator> + Send + Sync>;
pub type GaugeFn = Arc<dyn Fn(&[f64]) -> Result<Operator> + Send + Sync>;
/// `(a, R) ↦ ∂_a 𝒢[R]`.
pub type GaugePartialFn = Arc<dyn Fn(usize, &[f64]) -> Result<Operator> + Send + Sync>;

/// Operator-valued connection one-form on a chart.
#[derive(Clone)]
pub struct GaugeField {
    dim: usize,
    param_dim: usize,
    component_fn: ComponentFn,
    partial_fn: Option<ComponentPartialFn>,
    chart: Chart,
    allow_non_hermitian: bool,
    tol: Tolerances,
}

impl fmt::Debug for GaugeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeField")
            .field("dim", &self.dim)
            .field("param_dim", &self.param_dim)
            .field("analytic_partials", &self.partial_fn.is_some())
            .field("chart", &self.chart)
            .finish()
    }
}

impl GaugeField {
    pub fn new<F>(dim: usize, param_dim: usize, component: F) -> Self
    where
        F: Fn(usize, &[f64]) -> Result<Operator> + Send + Sync + 'static,
    {
        Self {
            dim,
            param_dim,
            component_fn: Arc::new(component),
            partial_fn: None,
            chart: Chart::unbounded(param_dim),
            allow_non_hermitian: false,
            tol: Tolerances::default(),
        }
    }

    pub fn with_partials<F>(mut self, partial: F) -> Self
    where
        F: Fn(usize, usize, &[f64]) -> Result<Operator> + Send + Sync + 'static,
    {
        self.partial_fn = Some(Arc::new(partial));
        self
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    /// Components are no longer required to be Hermitian; transport then
    /// stops being unitary.
    pub fn allow_non_hermitian(mut self, allow: bool) -> Self {
        self.allow_non_hermitian = allow;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn zero(dim: usize, param_dim: usize) -> Self {
        Self::new(dim, param_dim, move |_, _| Ok(Operator::zeros(dim))).with_partials(move |_, _, _| Ok(Operator::zeros(dim)))
    }

    /// `A_a[R] = matrices[a]` everywhere.
    pub fn constant(matrices: Vec<Operator>) -> Result<Self> {
        let dim = common_dim(&matrices)?;
        let param_dim = matrices.len();
        Ok(Self::new(dim, param_dim, move |a, _| Ok(matrices[a].clone()))
            .with_partials(move |_, _, _| Ok(Operator::zeros(dim))))
    }

    /// `A_a[R] = base[a] + Σ_b R_b slopes[a][b]`.
    pub fn linear(base: Vec<Operator>, slopes: Vec<Vec<Operator>>) -> Result<Self> {
        let dim = common_dim(&base)?;
        let d = base.len();
        if slopes.len() != d || slopes.iter().any(|row| row.len() != d) {
            return Err(Error::Dimension(format!("linear field needs a {d}x{d} grid of slope matrices")));
        }
        if slopes.iter().flatten().any(|m| m.dim() != dim) {
            return Err(Error::Dimension("slope matrices must match the fiber dimension".into()));
        }
        let slopes = Arc::new(slopes);
        let partial_slopes = Arc::clone(&slopes);
        Ok(Self::new(dim, d, move |a, r| {
            let mut acc = base[a].clone();
            for (b, &rb) in r.iter().enumerate() {
                acc = &acc + &slopes[a][b].scale_real(rb);
            }
            Ok(acc)
        })
        .with_partials(move |a, b, _| Ok(partial_slopes[a][b].clone())))
    }

    /// Monopole-type connection for a spin in a field direction on the unit
    /// sphere, coordinates `R = (φ, θ)`:
    /// `A_φ = (1 − cos θ) S_z`, `A_θ = 0`. Its only curvature component is
    /// `F_θφ = sin θ S_z`. The chart excludes the poles.
    pub fn sphere_spin(twice_spin: usize) -> Result<Self> {
        let [_, _, sz] = spin_matrices(twice_spin)?;
        let n = twice_spin + 1;
        let sz_partial = sz.clone();
        let chart = Chart {
            id: DEFAULT_CHART.into(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, std::f64::consts::PI)],
        };
        Ok(Self::new(n, 2, move |a, r| {
            Ok(if a == 0 { sz.scale_real(1.0 - r[1].cos()) } else { Operator::zeros(n) })
        })
        .with_partials(move |a, b, r| {
            Ok(if a == 0 && b == 1 { sz_partial.scale_real(r[1].sin()) } else { Operator::zeros(n) })
        })
        .with_chart(chart))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partial_fn.is_some()
    }

    pub fn allows_non_hermitian(&self) -> bool {
        self.allow_non_hermitian
    }

    fn check_index(&self, a: usize) -> Result<()> {
        if a < self.param_dim {
            Ok(())
        } else {
            Err(Error::Dimension(format!("component index {a} out of range for d={}", self.param_dim)))
        }
    }

    /// `A_a[R]`, validated for dimension and (unless disabled) Hermiticity.
    pub fn component(&self, a: usize, point: &ParameterPoint) -> Result<Operator> {
        self.check_index(a)?;
        self.chart.check(point)?;
        let op = (self.component_fn)(a, &point.coords)?;
        if op.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "component {a} has dimension {}, field has {}",
                op.dim(),
                self.dim
            )));
        }
        if !op.is_finite() {
            return Err(Error::InvalidValue(format!("component {a} is not finite at {:?}", point.coords)));
        }
        if !self.allow_non_hermitian && !crate::linalg::is_hermitian(&op, self.tol.herm) {
            return Err(Error::NotHermitian(format!(
                "A_{a} at {:?} (defect {:.3e})",
                point.coords,
                hermiticity_defect(&op)
            )));
        }
        Ok(op)
    }

    pub fn components(&self, point: &ParameterPoint) -> Result<Vec<Operator>> {
        (0..self.param_dim).map(|a| self.component(a, point)).collect()
    }

    /// `∂_b A_a[R]`: analytic when available, central difference otherwise.
    pub fn partial(&self, a: usize, b: usize, point: &ParameterPoint, fd_step: f64) -> Result<Operator> {
        self.check_index(a)?;
        self.check_index(b)?;
        self.chart.check(point)?;
        if let Some(partial) = &self.partial_fn {
            return partial(a, b, &point.coords);
        }
        let h = fd_step * (1.0 + point.coords[b].abs());
        let plus = self.component(a, &point.shifted(b, h))?;
        let minus = self.component(a, &point.shifted(b, -h))?;
        Ok((&plus - &minus).scale_real(0.5 / h))
    }
}

fn common_dim(ops: &[Operator]) -> Result<usize> {
    let first = ops
        .first()
        .ok_or_else(|| Error::Dimension("need at least one component".into()))?
        .dim();
    if ops.iter().any(|m| m.dim() != first) {
        return Err(Error::Dimension("all components must share the fiber dimension".into()));
    }
    Ok(first)
}

/// Unitary-valued function `R ↦ 𝒢[R]` on the fixed space.
#[derive(Clone)]
pub struct GaugeTransformation {
    dim: usize,
    param_dim: usize,
    g_fn: GaugeFn,
    partial_fn: Option<GaugePartialFn>,
    tol: Tolerances,
    fd_step: f64,
}

impl fmt::Debug for GaugeTransformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeTransformation")
            .field("dim", &self.dim)
            .field("param_dim", &self.param_dim)
            .field("analytic_partials", &self.partial_fn.is_some())
            .finish()
    }
}

impl GaugeTransformation {
    pub fn new<F>(dim: usize, param_dim: usize, g: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Operator> + Send + Sync + 'static,
    {
        Self {
            dim,
            param_dim,
            g_fn: Arc::new(g),
            partial_fn: None,
            tol: Tolerances::default(),
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_partials<F>(mut self, partial: F) -> Self
    where
        F: Fn(usize, &[f64]) -> Result<Operator> + Send + Sync + 'static,
    {
        self.partial_fn = Some(Arc::new(partial));
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Step used for the finite-difference fallback of `∂_a 𝒢`.
    pub fn with_fd_step(mut self, fd_step: f64) -> Self {
        self.fd_step = fd_step;
        self
    }

    pub fn identity(dim: usize, param_dim: usize) -> Self {
        Self::new(dim, param_dim, move |_| Ok(Operator::identity(dim))).with_partials(move |_, _| Ok(Operator::zeros(dim)))
    }

    pub fn constant(u: Operator, param_dim: usize) -> Self {
        let dim = u.dim();
        Self::new(dim, param_dim, move |_| Ok(u.clone())).with_partials(move |_, _| Ok(Operator::zeros(dim)))
    }

    /// `𝒢[R] = exp(−i Σ_a R_a K_a)` with Hermitian generators `K_a`;
    /// partials are exact through the Fréchet derivative of the exponential.
    pub fn from_generators(generators: Vec<Operator>) -> Result<Self> {
        let dim = common_dim(&generators)?;
        for (a, k) in generators.iter().enumerate() {
            if !crate::linalg::is_hermitian(k, Tolerances::default().herm) {
                return Err(Error::NotHermitian(format!("generator K_{a}")));
            }
        }
        let param_dim = generators.len();
        let gens = Arc::new(generators);
        let exponent = {
            let gens = Arc::clone(&gens);
            move |r: &[f64]| -> Operator {
                let mut acc = Operator::zeros(dim);
                for (k, &ra) in gens.iter().zip(r) {
                    acc = &acc + &k.scale(-I * ra);
                }
                acc
            }
        };
        let exponent_partial = exponent.clone();
        Ok(Self::new(dim, param_dim, move |r| Ok(matrix_exp(&exponent(r)))).with_partials(move |a, r| {
            exp_frechet(&exponent_partial(r), &gens[a].scale(-I))
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    /// `𝒢[R]`, checked for unitarity.
    pub fn value(&self, point: &ParameterPoint) -> Result<Operator> {
        if point.dim() != self.param_dim {
            return Err(Error::Dimension(format!(
                "gauge transformation expects {} coordinates, got {}",
                self.param_dim,
                point.dim()
            )));
        }
        let g = (self.g_fn)(&point.coords)?;
        if g.dim() != self.dim {
            return Err(Error::Dimension(format!("𝒢 has dimension {}, expected {}", g.dim(), self.dim)));
        }
        let defect = g.unitarity_defect();
        if !(defect <= self.tol.unitary) {
            return Err(Error::NonUnitary(format!("‖𝒢†𝒢 − I‖ = {defect:.3e} at {:?}", point.coords)));
        }
        Ok(g)
    }

    /// `∂_a 𝒢[R]`.
    pub fn partial(&self, a: usize, point: &ParameterPoint) -> Result<Operator> {
        if a >= self.param_dim {
            return Err(Error::Dimension(format!("index {a} out of range for d={}", self.param_dim)));
        }
        if let Some(partial) = &self.partial_fn {
            return partial(a, &point.coords);
        }
        let h = self.fd_step * (1.0 + point.coords[a].abs());
        let plus = self.value(&point.shifted(a, h))?;
        let minus = self.value(&point.shifted(a, -h))?;
        Ok((&plus - &minus).scale_real(0.5 / h))
    }

    /// `d𝒢[R(t)]/dt = Σ_a Ṙ_a ∂_a 𝒢`.
    pub fn derivative_along(&self, point: &ParameterPoint, velocity: &[f64]) -> Result<Operator> {
        let mut acc = Operator::zeros(self.dim);
        for (a, &va) in velocity.iter().enumerate() {
            if va != 0.0 {
                acc = &acc + &self.partial(a, point)?.scale_real(va);
            }
        }
        Ok(acc)
    }
}

fn check_compatible(field: &GaugeField, g: &GaugeTransformation) -> Result<()> {
    if field.dim != g.dim || field.param_dim != g.param_dim {
        return Err(Error::Dimension(format!(
            "field is (N={}, d={}), transformation is (N={}, d={})",
            field.dim, field.param_dim, g.dim, g.param_dim
        )));
    }
    Ok(())
}

/// Field strength `F_ab = ∂_a A_b − ∂_b A_a + i[A_a, A_b]` at `R`.
pub fn curvature(field: &GaugeField, a: usize, b: usize, point: &ParameterPoint, fd_step: f64) -> Result<Operator> {
    field.check_index(a)?;
    field.check_index(b)?;
    if a == b {
        field.chart.check(point)?;
        return Ok(Operator::zeros(field.dim));
    }
    let da_ab = field.partial(b, a, point, fd_step)?;
    let db_aa = field.partial(a, b, point, fd_step)?;
    let aa = field.component(a, point)?;
    let ab = field.component(b, point)?;
    let comm = aa.commutator(&ab)?;
    Ok(&(&da_ab - &db_aa) + &comm.scale(I))
}

/// Lazily evaluated curvature two-form of a connection.
#[derive(Clone, Debug)]
pub struct CurvatureField {
    field: GaugeField,
    fd_step: f64,
}

impl CurvatureField {
    pub fn new(field: GaugeField, fd_step: f64) -> Self {
        Self { field, fd_step }
    }

    pub fn component(&self, a: usize, b: usize, point: &ParameterPoint) -> Result<Operator> {
        curvature(&self.field, a, b, point, self.fd_step)
    }

    /// All independent components `F_ab`, `a < b`.
    pub fn upper_components(&self, point: &ParameterPoint) -> Result<Vec<((usize, usize), Operator)>> {
        let d = self.field.param_dim;
        let mut out = Vec::with_capacity(d * (d.saturating_sub(1)) / 2);
        for a in 0..d {
            for b in a + 1..d {
                out.push(((a, b), self.component(a, b, point)?));
            }
        }
        Ok(out)
    }
}

/// Basis change `Ã_a = 𝒢⁻¹ A_a 𝒢 − i 𝒢⁻¹ ∂_a 𝒢`.
pub fn passive_transform(field: &GaugeField, g: &GaugeTransformation) -> Result<GaugeField> {
    check_compatible(field, g)?;
    let field_inner = field.clone();
    let g = g.clone();
    let chart = field.chart.clone();
    Ok(GaugeField::new(field.dim, field.param_dim, move |a, r| {
        let point = ParameterPoint::in_chart(r.to_vec(), chart.id.clone())?;
        let gv = g.value(&point)?;
        let g_inv = gv.adjoint();
        let aa = field_inner.component(a, &point)?;
        let dg = g.partial(a, &point)?;
        Ok(&(&(&g_inv * &aa) * &gv) - &(&g_inv * &dg).scale(I))
    })
    .with_chart(field.chart.clone())
    .allow_non_hermitian(field.allow_non_hermitian)
    .with_tolerances(field.tol))
}

/// Active transformation `Ǎ_a = 𝒢 A_a 𝒢⁻¹ + i (∂_a 𝒢) 𝒢⁻¹`.
pub fn active_transform(field: &GaugeField, g: &GaugeTransformation) -> Result<GaugeField> {
    check_compatible(field, g)?;
    let field_inner = field.clone();
    let g = g.clone();
    let chart = field.chart.clone();
    Ok(GaugeField::new(field.dim, field.param_dim, move |a, r| {
        let point = ParameterPoint::in_chart(r.to_vec(), chart.id.clone())?;
        let gv = g.value(&point)?;
        let g_inv = gv.adjoint();
        let aa = field_inner.component(a, &point)?;
        let dg = g.partial(a, &point)?;
        Ok(&(&(&gv * &aa) * &g_inv) + &(&dg * &g_inv).scale(I))
    })
    .with_chart(field.chart.clone())
    .allow_non_hermitian(field.allow_non_hermitian)
    .with_tolerances(field.tol))
}

/// Flat connection `A_a = −i 𝒢⁻¹ ∂_a 𝒢`, the passive transform of zero.
pub fn pure_gauge(g: &GaugeTransformation) -> GaugeField {
    let g = g.clone();
    GaugeField::new(g.dim, g.param_dim, move |a, r| {
        let point = ParameterPoint::new(r.to_vec())?;
        let gv = g.value(&point)?;
        let dg = g.partial(a, &point)?;
        Ok((&gv.adjoint() * &dg).scale(-I))
    })
}

/// Largest `‖F_ab‖_max` over the sample points and index pairs `a < b`.
pub fn max_curvature(field: &GaugeField, samples: &[ParameterPoint], fd_step: f64) -> Result<f64> {
    let curv = CurvatureField::new(field.clone(), fd_step);
    let mut max = 0.0_f64;
    for point in samples {
        for (_, f) in curv.upper_components(point)? {
            max = max.max(f.max_abs());
        }
    }
    Ok(max)
}

pub fn is_flat(field: &GaugeField, samples: &[ParameterPoint], tol: f64, fd_step: f64) -> Result<bool> {
    Ok(max_curvature(field, samples, fd_step)? <= tol)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::{pauli, random, C64};

    fn pt(coords: &[f64]) -> ParameterPoint {
        ParameterPoint::new(coords.to_vec()).unwrap()
    }

    fn xy_field() -> GaugeField {
        let [sx, sy, _] = pauli();
        GaugeField::constant(vec![sx, sy]).unwrap()
    }

    /// Generator-based field and a 2-parameter unitary for covariance checks.
    fn random_setup(seed: u64, n: usize) -> (GaugeField, GaugeTransformation) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = vec![random::hermitian(n, &mut rng), random::hermitian(n, &mut rng)];
        let slopes = vec![
            vec![random::hermitian(n, &mut rng), random::hermitian(n, &mut rng)],
            vec![random::hermitian(n, &mut rng), random::hermitian(n, &mut rng)],
        ];
        let field = GaugeField::linear(base, slopes).unwrap();
        let g = GaugeTransformation::from_generators(vec![random::hermitian(n, &mut rng), random::hermitian(n, &mut rng)])
            .unwrap();
        (field, g)
    }

    #[test]
    fn constant_commuting_field_is_flat() {
        let [_, _, sz] = pauli();
        let field = GaugeField::constant(vec![sz.clone(), sz.scale_real(2.0)]).unwrap();
        let f = curvature(&field, 0, 1, &pt(&[0.2, -0.4]), DEFAULT_FD_STEP).unwrap();
        assert!(f.max_abs() == 0.0);
    }

    #[test]
    fn pauli_xy_curvature_is_minus_two_sigma_z() {
        // Oracle: i[σx, σy] = i·(2iσz) = −2σz, computed by direct multiplication.
        let [sx, sy, sz] = pauli();
        let direct = (&(&sx * &sy) - &(&sy * &sx)).scale(I);
        assert!(direct.max_diff(&sz.scale_real(-2.0)) < 1e-15);
        let f = curvature(&xy_field(), 0, 1, &pt(&[0.0, 0.0]), DEFAULT_FD_STEP).unwrap();
        assert!(f.max_diff(&direct) <= 1e-10);
    }

    #[test]
    fn diagonal_curvature_is_zero_and_antisymmetric() {
        let (field, _) = random_setup(1, 3);
        let p = pt(&[0.3, 0.1]);
        assert_eq!(curvature(&field, 1, 1, &p, 1e-5).unwrap(), Operator::zeros(3));
        let f01 = curvature(&field, 0, 1, &p, 1e-5).unwrap();
        let f10 = curvature(&field, 1, 0, &p, 1e-5).unwrap();
        assert!((&f01 + &f10).max_abs() <= 1e-10);
        assert!(crate::linalg::is_hermitian(&f01, 1e-10));
    }

    #[test]
    fn curvature_outside_chart_is_an_error() {
        let field = GaugeField::sphere_spin(1).unwrap();
        // θ within fd reach of the pole.
        let p = pt(&[0.0, 1e-7]);
        assert!(curvature(&field, 0, 1, &p, 1e-5).is_ok());
        assert!(matches!(field.component(0, &pt(&[0.0, -0.1])), Err(Error::ChartDomain(_))));
        let fd_field = GaugeField::new(2, 2, |a, r| {
            let [_, _, sz] = pauli();
            Ok(if a == 0 { sz.scale_real(1.0 - r[1].cos()) } else { Operator::zeros(2) })
        })
        .with_chart(field.chart().clone());
        assert!(matches!(curvature(&fd_field, 0, 1, &p, 1e-5), Err(Error::ChartDomain(_))));
    }

    #[test]
    fn sphere_spin_curvature_matches_analytic_and_fd() {
        let field = GaugeField::sphere_spin(1).unwrap();
        let fd_field = GaugeField::new(2, 2, |a, r| {
            let [_, _, sz] = pauli();
            let sz = sz.scale_real(0.5);
            Ok(if a == 0 { sz.scale_real(1.0 - r[1].cos()) } else { Operator::zeros(2) })
        })
        .with_chart(field.chart().clone());
        let p = pt(&[0.4, 0.9]);
        let exact = curvature(&field, 1, 0, &p, 1e-5).unwrap();
        let expected = pauli()[2].scale_real(0.5 * 0.9_f64.sin());
        assert!(exact.max_diff(&expected) < 1e-14);
        assert!(curvature(&fd_field, 1, 0, &p, 1e-5).unwrap().max_diff(&expected) < 1e-9);
    }

    #[test]
    fn passive_identity_and_constant() {
        let (field, _) = random_setup(2, 2);
        let p = pt(&[0.5, -0.2]);
        let same = passive_transform(&field, &GaugeTransformation::identity(2, 2)).unwrap();
        for a in 0..2 {
            assert!(same.component(a, &p).unwrap().max_diff(&field.component(a, &p).unwrap()) < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random::unitary(2, &mut rng);
        let conj = passive_transform(&field, &GaugeTransformation::constant(u.clone(), 2)).unwrap();
        for a in 0..2 {
            let expected = &(&u.adjoint() * &field.component(a, &p).unwrap()) * &u;
            assert!(conj.component(a, &p).unwrap().max_diff(&expected) < 1e-13);
        }
    }

    #[test]
    fn one_parameter_group_signs() {
        // 𝒢 = exp(−iR K): ∂𝒢 = −iK𝒢, so −i𝒢⁻¹∂𝒢 = −K and i(∂𝒢)𝒢⁻¹ = K.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = random::hermitian(3, &mut rng);
        let g = GaugeTransformation::from_generators(vec![k.clone()]).unwrap();
        let zero = GaugeField::zero(3, 1);
        let p = pt(&[0.77]);
        let passive = passive_transform(&zero, &g).unwrap().component(0, &p).unwrap();
        let active = active_transform(&zero, &g).unwrap().component(0, &p).unwrap();
        let pure = pure_gauge(&g).component(0, &p).unwrap();
        assert!(passive.max_diff(&k.scale_real(-1.0)) < 1e-12);
        assert!(active.max_diff(&k) < 1e-12);
        assert!(pure.max_diff(&k.scale_real(-1.0)) < 1e-12);
    }

    #[test]
    fn pure_gauge_of_identity_is_zero() {
        let field = pure_gauge(&GaugeTransformation::identity(2, 3));
        for a in 0..3 {
            assert_eq!(field.component(a, &pt(&[0.1, 0.2, 0.3])).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn pure_gauge_is_flat() {
        let (_, g) = random_setup(5, 3);
        let field = pure_gauge(&g);
        let samples: Vec<_> = [[0.1, 0.2], [-0.4, 0.9], [1.3, -0.7]].iter().map(|c| pt(c)).collect();
        for step in [1e-4, 1e-5] {
            let max = max_curvature(&field, &samples, step).unwrap();
            assert!(max <= 1e-6, "step {step}: {max}");
        }
        assert!(is_flat(&field, &samples, 1e-5, 1e-4).unwrap());
    }

    #[test]
    fn flatness_examples() {
        let samples = vec![pt(&[0.0, 0.0]), pt(&[1.0, -2.0])];
        assert!(is_flat(&GaugeField::zero(2, 2), &samples, 1e-12, 1e-5).unwrap());
        assert!(!is_flat(&xy_field(), &samples, 1e-3, 1e-5).unwrap());
    }

    #[test]
    fn curvature_is_gauge_covariant() {
        for seed in 0..4 {
            let (field, g) = random_setup(10 + seed, 3);
            let transformed = passive_transform(&field, &g).unwrap();
            let p = pt(&[0.3 * seed as f64 - 0.4, 0.25]);
            let f = curvature(&field, 0, 1, &p, 1e-4).unwrap();
            let ft = curvature(&transformed, 0, 1, &p, 1e-4).unwrap();
            let gv = g.value(&p).unwrap();
            let expected = &(&gv.adjoint() * &f) * &gv;
            assert!(ft.max_diff(&expected) <= 1e-6, "seed {seed}: {}", ft.max_diff(&expected));
        }
    }

    #[test]
    fn transforms_preserve_hermiticity_and_invert() {
        let (field, g) = random_setup(21, 4);
        let p = pt(&[0.6, -0.3]);
        let active = active_transform(&field, &g).unwrap();
        let back = passive_transform(&active, &g).unwrap();
        for a in 0..2 {
            let ca = active.component(a, &p).unwrap();
            assert!(hermiticity_defect(&ca) <= 1e-9);
            let cp = passive_transform(&field, &g).unwrap().component(a, &p).unwrap();
            assert!(hermiticity_defect(&cp) <= 1e-9);
            assert!(back.component(a, &p).unwrap().max_diff(&field.component(a, &p).unwrap()) <= 1e-10);
        }
    }

    #[test]
    fn non_hermitian_components_are_gated() {
        let l = Operator::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        ])
        .unwrap();
        let field = GaugeField::constant(vec![l.clone()]).unwrap();
        assert!(matches!(field.component(0, &pt(&[0.0])), Err(Error::NotHermitian(_))));
        let field = field.allow_non_hermitian(true);
        assert_eq!(field.component(0, &pt(&[0.0])).unwrap(), l);
    }

    #[test]
    fn non_unitary_transformation_is_rejected() {
        let g = GaugeTransformation::constant(Operator::identity(2).scale_real(2.0), 2);
        let err = passive_transform(&xy_field(), &g).unwrap().component(0, &pt(&[0.0, 0.0]));
        assert!(matches!(err, Err(Error::NonUnitary(_))));
    }

    #[test]
    fn fd_partials_of_generator_transformation_agree_with_frechet() {
        let (_, g) = random_setup(30, 3);
        let g_fd = GaugeTransformation::new(3, 2, {
            let g = g.clone();
            move |r| g.value(&ParameterPoint::new(r.to_vec())?)
        });
        let p = pt(&[0.2, 0.5]);
        for a in 0..2 {
            assert!(g.partial(a, &p).unwrap().max_diff(&g_fd.partial(a, &p).unwrap()) < 1e-9);
        }
    }
}
