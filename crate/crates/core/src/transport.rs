//! Curves in parameter space, the covariant time derivative and the
//! fixed-space Schrödinger equation `iħ dΨ/dt = (H_A + H_E) Ψ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{GaugeField, ParameterPoint, DEFAULT_CHART};
use crate::integrator::{check_hbar, evolve_states, propagators, Integrator, TimeGrid};
use crate::linalg::{is_hermitian, hermiticity_defect, Operator, StateVector, Tolerances, I};

/// Relative step of the velocity and `dΨ/dt` fallbacks: `1e-6·(1+|t|)`.
pub const VELOCITY_FD_STEP: f64 = 1e-6;

/// Absolute coordinate tolerance for a curve to count as closed.
pub const LOOP_CLOSURE_TOL: f64 = 1e-12;

pub type PositionFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
pub type PointOperatorFn = Arc<dyn Fn(&ParameterPoint) -> Result<Operator> + Send + Sync>;

/// `t ↦ R(t)` on `[t_start, t_end]`.
#[derive(Clone)]
pub struct ParameterCurve {
    param_dim: usize,
    position_fn: PositionFn,
    velocity_fn: Option<PositionFn>,
    t_start: f64,
    t_end: f64,
    chart_id: String,
}

impl fmt::Debug for ParameterCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterCurve")
            .field("param_dim", &self.param_dim)
            .field("t_start", &self.t_start)
            .field("t_end", &self.t_end)
            .field("analytic_velocity", &self.velocity_fn.is_some())
            .finish()
    }
}

impl ParameterCurve {
    pub fn new<F>(param_dim: usize, t_start: f64, t_end: f64, position: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        if param_dim == 0 {
            return Err(Error::Dimension("curve needs d ≥ 1".into()));
        }
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(Error::InvalidValue(format!("curve domain [{t_start}, {t_end}] is empty or not finite")));
        }
        Ok(Self {
            param_dim,
            position_fn: Arc::new(position),
            velocity_fn: None,
            t_start,
            t_end,
            chart_id: DEFAULT_CHART.into(),
        })
    }

    pub fn with_velocity<F>(mut self, velocity: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.velocity_fn = Some(Arc::new(velocity));
        self
    }

    pub fn with_chart_id(mut self, chart_id: impl Into<String>) -> Self {
        self.chart_id = chart_id.into();
        self
    }

    /// Straight segment from `from` at `t_start` to `to` at `t_end`.
    pub fn line(from: Vec<f64>, to: Vec<f64>, t_start: f64, t_end: f64) -> Result<Self> {
        if from.len() != to.len() {
            return Err(Error::Dimension(format!(
                "line endpoints have {} and {} coordinates",
                from.len(),
                to.len()
            )));
        }
        let span = t_end - t_start;
        let velocity: Vec<f64> = from.iter().zip(&to).map(|(a, b)| (b - a) / span).collect();
        let v = velocity.clone();
        Self::new(from.len(), t_start, t_end, move |t| {
            from.iter().zip(&v).map(|(a, va)| a + va * (t - t_start)).collect()
        })
        .map(|c| c.with_velocity(move |_| velocity.clone()))
    }

    /// Field direction at fixed polar angle `theta`, azimuth `φ(t) = ωt`.
    /// Coordinates are `(φ, θ)`.
    pub fn circle_on_sphere(theta: f64, omega: f64, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(2, t_start, t_end, move |t| vec![omega * t, theta]).map(|c| c.with_velocity(move |_| vec![omega, 0.0]))
    }

    /// Counter-clockwise square of side `side` in the `(a, b)` coordinate
    /// plane starting at `origin`, traversed on `t ∈ [0, 4]`, one side per
    /// unit of time.
    pub fn square_loop(origin: Vec<f64>, a: usize, b: usize, side: f64) -> Result<Self> {
        let d = origin.len();
        if a >= d || b >= d || a == b {
            return Err(Error::Dimension(format!("square loop needs distinct coordinates below d={d}")));
        }
        let corner = move |t: f64| -> (f64, f64, f64, f64) {
            // (offset_a, offset_b, velocity_a, velocity_b)
            let s = t.clamp(0.0, 4.0);
            if s < 1.0 {
                (s * side, 0.0, side, 0.0)
            } else if s < 2.0 {
                (side, (s - 1.0) * side, 0.0, side)
            } else if s < 3.0 {
                ((3.0 - s) * side, side, -side, 0.0)
            } else {
                (0.0, (4.0 - s) * side, 0.0, -side)
            }
        };
        let origin_v = origin.clone();
        Ok(Self::new(d, 0.0, 4.0, move |t| {
            let (da, db, _, _) = corner(t);
            let mut r = origin.clone();
            r[a] += da;
            r[b] += db;
            r
        })?
        .with_velocity(move |t| {
            let (_, _, va, vb) = corner(t);
            let mut v = vec![0.0; origin_v.len()];
            v[a] = va;
            v[b] = vb;
            v
        }))
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    fn slack(&self, t: f64) -> f64 {
        1e-12 * (1.0 + t.abs())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && t >= self.t_start - self.slack(t) && t <= self.t_end + self.slack(t) {
            Ok(())
        } else {
            Err(Error::InvalidValue(format!(
                "t={t} outside the curve domain [{}, {}]",
                self.t_start, self.t_end
            )))
        }
    }

    fn checked(&self, v: Vec<f64>, what: &str, t: f64) -> Result<Vec<f64>> {
        if v.len() != self.param_dim {
            return Err(Error::Dimension(format!(
                "curve {what} has {} coordinates, expected {}",
                v.len(),
                self.param_dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue(format!("curve {what} is not finite at t={t}")));
        }
        Ok(v)
    }

    pub fn position(&self, t: f64) -> Result<ParameterPoint> {
        self.check_time(t)?;
        let coords = self.checked((self.position_fn)(t), "position", t)?;
        ParameterPoint::in_chart(coords, self.chart_id.clone())
    }

    /// `dR/dt`, analytic when supplied, otherwise a second-order difference
    /// with step `1e-6·(1+|t|)`, one-sided near the ends of the domain.
    pub fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        if let Some(v) = &self.velocity_fn {
            return self.checked(v(t), "velocity", t);
        }
        let h = VELOCITY_FD_STEP * (1.0 + t.abs());
        let p = |s: f64| self.checked((self.position_fn)(s), "position", s);
        let combine = |terms: &[(f64, Vec<f64>)], scale: f64| -> Vec<f64> {
            (0..self.param_dim)
                .map(|i| terms.iter().map(|(c, v)| c * v[i]).sum::<f64>() * scale)
                .collect()
        };
        let v = if t - h >= self.t_start && t + h <= self.t_end {
            combine(&[(1.0, p(t + h)?), (-1.0, p(t - h)?)], 0.5 / h)
        } else if t + 2.0 * h <= self.t_end {
            combine(&[(-3.0, p(t)?), (4.0, p(t + h)?), (-1.0, p(t + 2.0 * h)?)], 0.5 / h)
        } else if t - 2.0 * h >= self.t_start {
            combine(&[(3.0, p(t)?), (-4.0, p(t - h)?), (1.0, p(t - 2.0 * h)?)], 0.5 / h)
        } else {
            return Err(Error::Boundary(format!("curve domain too short to differentiate at t={t}")));
        };
        self.checked(v, "velocity", t)
    }

    /// Whether `R(t_start) = R(t_end)` coordinate-wise within `tol`.
    pub fn is_closed(&self, tol: f64) -> Result<bool> {
        let a = self.position(self.t_start)?;
        let b = self.position(self.t_end)?;
        Ok(a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol))
    }
}

/// Hermitian-valued global section `R ↦ 𝔥[R]`.
#[derive(Clone)]
pub struct SectionHamiltonian {
    dim: usize,
    h_fn: PointOperatorFn,
    tol: Tolerances,
}

impl fmt::Debug for SectionHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectionHamiltonian").field("dim", &self.dim).finish()
    }
}

impl SectionHamiltonian {
    pub fn new<F>(dim: usize, h: F) -> Self
    where
        F: Fn(&ParameterPoint) -> Result<Operator> + Send + Sync + 'static,
    {
        Self {
            dim,
            h_fn: Arc::new(h),
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| Ok(Operator::zeros(dim)))
    }

    pub fn constant(h: Operator) -> Self {
        Self::new(h.dim(), move |_| Ok(h.clone()))
    }

    /// Spin in a magnetic field of fixed magnitude pointing along the unit
    /// vector with coordinates `R = (φ, θ)`: `𝔥 = ħ ω_L B̂(R)·S`.
    pub fn spin_in_field(twice_spin: usize, larmor: f64, hbar: f64) -> Result<Self> {
        let [sx, sy, sz] = crate::linalg::spin_matrices(twice_spin)?;
        Ok(Self::new(twice_spin + 1, move |r| {
            let (phi, theta) = (r.coords()[0], r.coords()[1]);
            let b = &(&sx.scale_real(theta.sin() * phi.cos()) + &sy.scale_real(theta.sin() * phi.sin()))
                + &sz.scale_real(theta.cos());
            Ok(b.scale_real(hbar * larmor))
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, point: &ParameterPoint) -> Result<Operator> {
        let h = (self.h_fn)(point)?;
        if h.dim() != self.dim {
            return Err(Error::Dimension(format!("𝔥 has dimension {}, expected {}", h.dim(), self.dim)));
        }
        if !is_hermitian(&h, self.tol.herm) {
            return Err(Error::NotHermitian(format!(
                "section Hamiltonian at {:?} (defect {:.3e})",
                point.coords(),
                hermiticity_defect(&h)
            )));
        }
        Ok(h)
    }
}

/// Unitary frame `R ↦ 𝔘[R]` relating fixed-space and fiber vectors,
/// `ψ = 𝔘[R] Ψ`.
#[derive(Clone)]
pub struct FrameMap {
    dim: usize,
    u_fn: PointOperatorFn,
    tol: Tolerances,
}

impl fmt::Debug for FrameMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameMap").field("dim", &self.dim).finish()
    }
}

impl FrameMap {
    pub fn new<F>(dim: usize, u: F) -> Self
    where
        F: Fn(&ParameterPoint) -> Result<Operator> + Send + Sync + 'static,
    {
        Self {
            dim,
            u_fn: Arc::new(u),
            tol: Tolerances::default(),
        }
    }

    pub fn value(&self, point: &ParameterPoint) -> Result<Operator> {
        let u = (self.u_fn)(point)?;
        if u.dim() != self.dim {
            return Err(Error::Dimension(format!("frame map has dimension {}, expected {}", u.dim(), self.dim)));
        }
        let defect = u.unitarity_defect();
        if !(defect <= self.tol.unitary) {
            return Err(Error::NonUnitary(format!("frame map at {:?} (defect {defect:.3e})", point.coords())));
        }
        Ok(u)
    }
}

/// Monotone change of time variable `τ = f(t)` on `[t_start, t_end]`.
#[derive(Clone)]
pub struct Reparametrization {
    f_fn: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    fprime_fn: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    t_start: f64,
    t_end: f64,
}

impl fmt::Debug for Reparametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reparametrization")
            .field("t_start", &self.t_start)
            .field("t_end", &self.t_end)
            .finish()
    }
}

/// Points at which monotonicity is sampled, endpoints included.
const MONOTONE_SAMPLES: usize = 256;

impl Reparametrization {
    pub fn new<F>(t_start: f64, t_end: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(Error::InvalidValue(format!("domain [{t_start}, {t_end}] is empty or not finite")));
        }
        Ok(Self {
            f_fn: Arc::new(f),
            fprime_fn: None,
            t_start,
            t_end,
        })
    }

    pub fn with_derivative<F>(mut self, fprime: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.fprime_fn = Some(Arc::new(fprime));
        self
    }

    /// `f(t) = scale·t + offset` on `[t_start, t_end]`.
    pub fn affine(scale: f64, offset: f64, t_start: f64, t_end: f64) -> Result<Self> {
        Ok(Self::new(t_start, t_end, move |t| scale * t + offset)?.with_derivative(move |_| scale))
    }

    /// `f(t) = t^p` on `[t_start, t_end]`, `t_start > 0`.
    pub fn power(exponent: f64, t_start: f64, t_end: f64) -> Result<Self> {
        if t_start <= 0.0 {
            return Err(Error::InvalidValue("power reparametrization needs a positive domain".into()));
        }
        Ok(Self::new(t_start, t_end, move |t| t.powf(exponent))?
            .with_derivative(move |t| exponent * t.powf(exponent - 1.0)))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.f_fn)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if let Some(fp) = &self.fprime_fn {
            return fp(t);
        }
        let h = VELOCITY_FD_STEP * (1.0 + t.abs());
        let lo = (t - h).max(self.t_start);
        let hi = (t + h).min(self.t_end);
        (self.value(hi) - self.value(lo)) / (hi - lo)
    }

    /// Sign of `f′` on the domain, or [`Error::NotMonotone`].
    pub fn check_monotone(&self) -> Result<f64> {
        let mut sign = 0.0;
        for k in 0..=MONOTONE_SAMPLES {
            let t = self.t_start + (self.t_end - self.t_start) * k as f64 / MONOTONE_SAMPLES as f64;
            let d = self.derivative(t);
            if !d.is_finite() || d == 0.0 {
                return Err(Error::NotMonotone(format!("f′({t}) = {d}")));
            }
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign {
                return Err(Error::NotMonotone(format!("f′ changes sign near t={t}")));
            }
        }
        Ok(sign)
    }
}

/// Curve `t ↦ R(f(t))` with velocity `f′(t) (dR/dτ)(f(t))`.
pub fn reparametrize(curve: &ParameterCurve, f: &Reparametrization) -> Result<ParameterCurve> {
    f.check_monotone()?;
    for t in [f.t_start, f.t_end] {
        let tau = f.value(t);
        curve.check_time(tau).map_err(|_| {
            Error::InvalidValue(format!(
                "f({t}) = {tau} lies outside the curve domain [{}, {}]",
                curve.t_start, curve.t_end
            ))
        })?;
    }
    let (inner, inner_v, map, map_v) = (curve.clone(), curve.clone(), f.clone(), f.clone());
    Ok(ParameterCurve::new(curve.param_dim, f.t_start, f.t_end, move |t| {
        (inner.position_fn)(map.value(t))
    })?
    .with_velocity(move |t| {
        let scale = map_v.derivative(t);
        match inner_v.velocity(map_v.value(t)) {
            Ok(v) => v.into_iter().map(|x| scale * x).collect(),
            Err(_) => vec![f64::NAN; inner_v.param_dim],
        }
    })
    .with_chart_id(curve.chart_id.clone()))
}

fn check_field_curve(field: &GaugeField, curve: &ParameterCurve) -> Result<()> {
    if field.param_dim() != curve.param_dim {
        return Err(Error::Dimension(format!(
            "gauge field has d={}, curve has d={}",
            field.param_dim(),
            curve.param_dim
        )));
    }
    Ok(())
}

/// `H_A(t) = ħ Σ_a Ṙ_a(t) A_a[R(t)]`.
pub fn connection_hamiltonian(field: &GaugeField, curve: &ParameterCurve, t: f64, hbar: f64) -> Result<Operator> {
    check_field_curve(field, curve)?;
    let point = curve.position(t)?;
    let velocity = curve.velocity(t)?;
    let mut acc = Operator::zeros(field.dim());
    for (a, &va) in velocity.iter().enumerate() {
        if va != 0.0 {
            acc = &acc + &field.component(a, &point)?.scale_real(hbar * va);
        }
    }
    Ok(acc)
}

/// `𝒟_t Ψ = dΨ/dt + i Σ_a Ṙ_a A_a Ψ`, with `dΨ/dt` from a second-order
/// difference of step `fd_step·(1+|t|)`, one-sided near the ends of the
/// curve domain.
pub fn covariant_derivative<F>(
    field: &GaugeField,
    curve: &ParameterCurve,
    psi: F,
    t: f64,
    fd_step: f64,
) -> Result<StateVector>
where
    F: Fn(f64) -> Result<StateVector>,
{
    let h = fd_step * (1.0 + t.abs());
    let (lo, hi) = (curve.t_start, curve.t_end);
    if !(t >= lo && t <= hi) {
        return Err(Error::Boundary(format!("t={t} outside [{lo}, {hi}]")));
    }
    let combine = |terms: &[(f64, f64)]| -> Result<StateVector> {
        let mut acc: Option<StateVector> = None;
        for &(c, s) in terms {
            let term = psi(s)?.scale((c * 0.5 / h).into());
            acc = Some(match acc {
                None => term,
                Some(a) => &a + &term,
            });
        }
        Ok(acc.expect("non-empty stencil"))
    };
    let dpsi = if t - h >= lo && t + h <= hi {
        combine(&[(1.0, t + h), (-1.0, t - h)])?
    } else if t + 2.0 * h <= hi {
        combine(&[(-3.0, t), (4.0, t + h), (-1.0, t + 2.0 * h)])?
    } else if t - 2.0 * h >= lo {
        combine(&[(3.0, t), (-4.0, t - h), (1.0, t - 2.0 * h)])?
    } else {
        return Err(Error::Boundary(format!("no room for a difference stencil at t={t}")));
    };
    covariant_derivative_from(field, curve, &psi(t)?, &dpsi, t)
}

/// `𝒟_t Ψ` from a known state and its time derivative.
pub fn covariant_derivative_from(
    field: &GaugeField,
    curve: &ParameterCurve,
    psi: &StateVector,
    dpsi: &StateVector,
    t: f64,
) -> Result<StateVector> {
    let h_a = connection_hamiltonian(field, curve, t, 1.0)?;
    let coupling = h_a.apply(psi)?.scale(I);
    if dpsi.dim() != coupling.dim() {
        return Err(Error::Dimension("dΨ/dt and Ψ differ in dimension".into()));
    }
    Ok(dpsi + &coupling)
}

/// Trajectory with diagnostics.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub report: EvolutionReport,
}

#[derive(Clone, Debug)]
pub struct EvolutionReport {
    /// `max_k |‖Ψ_k‖ − ‖Ψ_0‖|`.
    pub norm_drift: f64,
    pub steps: usize,
    pub integrator: Integrator,
    /// `ψ(t_k) = 𝔘[R(t_k)] Ψ(t_k)` when a frame map was supplied.
    pub fiber_states: Option<Vec<StateVector>>,
}

impl EvolutionResult {
    fn assemble(grid: &TimeGrid, states: Vec<StateVector>, integrator: Integrator) -> Self {
        let n0 = states[0].norm();
        let norm_drift = states.iter().map(|s| (s.norm() - n0).abs()).fold(0.0, f64::max);
        Self {
            times: grid.times(),
            states,
            report: EvolutionReport {
                norm_drift,
                steps: grid.steps(),
                integrator,
                fiber_states: None,
            },
        }
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }
}

fn check_grid_in_curve(curve: &ParameterCurve, grid: &TimeGrid) -> Result<()> {
    curve.check_time(grid.start())?;
    curve.check_time(grid.end())
}

fn check_state(psi0: &StateVector, n: usize) -> Result<()> {
    if psi0.dim() != n {
        return Err(Error::Dimension(format!("initial state has dimension {}, fiber has {n}", psi0.dim())));
    }
    Ok(())
}

/// Solves `𝒟_t Ψ = 0`, i.e. `dΨ/dt = −i Σ_a Ṙ_a A_a Ψ`.
pub fn parallel_transport(
    field: &GaugeField,
    curve: &ParameterCurve,
    psi0: &StateVector,
    grid: &TimeGrid,
    integrator: Integrator,
) -> Result<EvolutionResult> {
    check_field_curve(field, curve)?;
    check_state(psi0, field.dim())?;
    check_grid_in_curve(curve, grid)?;
    let h = |t: f64| connection_hamiltonian(field, curve, t, 1.0);
    let states = evolve_states(&h, psi0, grid, 1.0, integrator)?;
    Ok(EvolutionResult::assemble(grid, states, integrator))
}

/// Everything that defines the covariant Schrödinger equation along a curve.
#[derive(Clone, Copy, Debug)]
pub struct CovariantSystem<'a> {
    pub field: &'a GaugeField,
    pub section: &'a SectionHamiltonian,
    pub frame_map: Option<&'a FrameMap>,
    pub curve: &'a ParameterCurve,
    pub hbar: f64,
}

impl CovariantSystem<'_> {
    fn check(&self) -> Result<()> {
        check_hbar(self.hbar)?;
        check_field_curve(self.field, self.curve)?;
        if self.section.dim() != self.field.dim() {
            return Err(Error::Dimension(format!(
                "section Hamiltonian has N={}, gauge field has N={}",
                self.section.dim(),
                self.field.dim()
            )));
        }
        if let Some(frame) = self.frame_map {
            if frame.dim != self.field.dim() {
                return Err(Error::Dimension("frame map dimension differs from the fiber".into()));
            }
        }
        Ok(())
    }

    /// `H_E(t) = 𝔘⁻¹ 𝔥 𝔘` at `R(t)`.
    pub fn section_term(&self, t: f64) -> Result<Operator> {
        let point = self.curve.position(t)?;
        let h = self.section.value(&point)?;
        match self.frame_map {
            None => Ok(h),
            Some(frame) => {
                let u = frame.value(&point)?;
                Ok(&(&u.adjoint() * &h) * &u)
            }
        }
    }

    /// `H_A(t) + H_E(t)`.
    pub fn hamiltonian(&self, t: f64) -> Result<Operator> {
        Ok(&connection_hamiltonian(self.field, self.curve, t, self.hbar)? + &self.section_term(t)?)
    }
}

/// Integrates `iħ dΨ/dt = (H_A + H_E) Ψ` in the fixed space.
pub fn evolve_covariant(
    system: &CovariantSystem<'_>,
    psi0: &StateVector,
    grid: &TimeGrid,
    integrator: Integrator,
) -> Result<EvolutionResult> {
    system.check()?;
    check_state(psi0, system.field.dim())?;
    check_grid_in_curve(system.curve, grid)?;
    let h = |t: f64| system.hamiltonian(t);
    let states = evolve_states(&h, psi0, grid, system.hbar, integrator)?;
    let mut result = EvolutionResult::assemble(grid, states, integrator);
    if let Some(frame) = system.frame_map {
        let fiber = result
            .times
            .iter()
            .zip(&result.states)
            .map(|(&t, s)| frame.value(&system.curve.position(t)?)?.apply(s))
            .collect::<Result<Vec<_>>>()?;
        result.report.fiber_states = Some(fiber);
    }
    Ok(result)
}

/// Transport operator `W` around a closed curve: `Ψ(t_end) = W Ψ(t_start)`.
/// The grid must span the curve domain.
pub fn holonomy(field: &GaugeField, loop_curve: &ParameterCurve, grid: &TimeGrid, integrator: Integrator) -> Result<Operator> {
    check_field_curve(field, loop_curve)?;
    if !loop_curve.is_closed(LOOP_CLOSURE_TOL)? {
        return Err(Error::NotALoop(format!(
            "R({}) and R({}) differ by more than {LOOP_CLOSURE_TOL:e}",
            loop_curve.t_start, loop_curve.t_end
        )));
    }
    let spans = |a: f64, b: f64| (a - b).abs() <= loop_curve.slack(b);
    if !(spans(grid.start(), loop_curve.t_start) && spans(grid.end(), loop_curve.t_end)) {
        return Err(Error::InvalidValue(format!(
            "holonomy grid [{}, {}] must span the loop domain [{}, {}]",
            grid.start(),
            grid.end(),
            loop_curve.t_start,
            loop_curve.t_end
        )));
    }
    let h = |t: f64| connection_hamiltonian(field, loop_curve, t, 1.0);
    Ok(propagators(&h, grid, 1.0, integrator)?.pop().expect("grid has at least two points"))
}
