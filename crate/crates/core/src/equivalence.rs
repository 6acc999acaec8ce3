//! Unitary equivalence of Hilbert space and Hamiltonian pairs.
//!
//! An intertwiner `𝒰(t)` maps pair 1 to pair 2: states `ψ₂ = 𝒰ψ₁`,
//! observables `O₂ = 𝒰O₁𝒰⁻¹`, Hamiltonians
//! `H₂ = 𝒰H₁𝒰⁻¹ + iħ 𝒰̇𝒰⁻¹`. Only observables keep their spectrum.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{GaugeField, GaugeTransformation};
use crate::integrator::{check_hbar, TimeGrid};
use crate::linalg::{expectation_value, metric_inner_product, random, MetricOperator, Operator, StateVector, Tolerances, I};
use crate::transport::{connection_hamiltonian, ParameterCurve, VELOCITY_FD_STEP};

pub type OperatorPath = Arc<dyn Fn(f64) -> Result<Operator> + Send + Sync>;

/// A Hilbert space, given by its metric on the common vector space, and the
/// Hamiltonian generating its dynamics.
#[derive(Clone)]
pub struct RepresentationPair {
    metric: MetricOperator,
    h_fn: OperatorPath,
}

impl fmt::Debug for RepresentationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RepresentationPair").field("metric", &self.metric).finish()
    }
}

impl RepresentationPair {
    pub fn new<F>(metric: MetricOperator, h: F) -> Self
    where
        F: Fn(f64) -> Result<Operator> + Send + Sync + 'static,
    {
        Self {
            metric,
            h_fn: Arc::new(h),
        }
    }

    pub fn constant(metric: MetricOperator, h: Operator) -> Self {
        Self::new(metric, move |_| Ok(h.clone()))
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> &MetricOperator {
        &self.metric
    }

    pub fn hamiltonian(&self, t: f64) -> Result<Operator> {
        let h = (self.h_fn)(t)?;
        if h.dim() != self.dim() {
            return Err(Error::Dimension(format!("H({t}) has dimension {}, pair has {}", h.dim(), self.dim())));
        }
        if !h.is_finite() {
            return Err(Error::InvalidValue(format!("H({t}) is not finite")));
        }
        Ok(h)
    }
}

/// Time-dependent invertible map `𝒰(t)` between two pairs.
#[derive(Clone)]
pub struct Intertwiner {
    dim: usize,
    u_fn: OperatorPath,
    udot_fn: Option<OperatorPath>,
    domain: (f64, f64),
    max_condition: f64,
}

impl fmt::Debug for Intertwiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Intertwiner")
            .field("dim", &self.dim)
            .field("analytic_derivative", &self.udot_fn.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl Intertwiner {
    pub fn new<F>(dim: usize, u: F) -> Self
    where
        F: Fn(f64) -> Result<Operator> + Send + Sync + 'static,
    {
        Self {
            dim,
            u_fn: Arc::new(u),
            udot_fn: None,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            max_condition: Tolerances::default().max_condition,
        }
    }

    pub fn with_derivative<F>(mut self, udot: F) -> Self
    where
        F: Fn(f64) -> Result<Operator> + Send + Sync + 'static,
    {
        self.udot_fn = Some(Arc::new(udot));
        self
    }

    /// Restricts the times at which `𝒰` may be evaluated; the
    /// finite-difference derivative then fails near the edges.
    pub fn with_domain(mut self, t_start: f64, t_end: f64) -> Self {
        self.domain = (t_start, t_end);
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(Operator::identity(dim))
    }

    pub fn constant(u: Operator) -> Self {
        let dim = u.dim();
        Self::new(dim, move |_| Ok(u.clone())).with_derivative(move |_| Ok(Operator::zeros(dim)))
    }

    /// `𝒰(t) = exp(−i t K / ħ)` with exact derivative `−(i/ħ) K 𝒰`.
    pub fn exponential(generator: Operator, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let dim = generator.dim();
        let k = generator.clone();
        let kd = generator;
        Ok(Self::new(dim, move |t| Ok(crate::linalg::matrix_exp(&k.scale(-I * (t / hbar)))))
            .with_derivative(move |t| {
                let u = crate::linalg::matrix_exp(&kd.scale(-I * (t / hbar)));
                Ok((&kd * &u).scale(-I / hbar))
            }))
    }

    /// `𝒰(t) = 𝒢[R(t)]` with `𝒰̇ = Σ_a Ṙ_a ∂_a 𝒢`.
    pub fn along_curve(g: &GaugeTransformation, curve: &ParameterCurve) -> Self {
        let (g_value, g_dot) = (g.clone(), g.clone());
        let (c_value, c_dot) = (curve.clone(), curve.clone());
        Self::new(g.dim(), move |t| g_value.value(&c_value.position(t)?))
            .with_derivative(move |t| g_dot.derivative_along(&c_dot.position(t)?, &c_dot.velocity(t)?))
            .with_domain(curve.t_start(), curve.t_end())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, t: f64) -> Result<Operator> {
        let (lo, hi) = self.domain;
        if !(t >= lo && t <= hi) {
            return Err(Error::Boundary(format!("t={t} outside the intertwiner domain [{lo}, {hi}]")));
        }
        let u = (self.u_fn)(t)?;
        if u.dim() != self.dim {
            return Err(Error::Dimension(format!("𝒰({t}) has dimension {}, expected {}", u.dim(), self.dim)));
        }
        if !u.is_finite() {
            return Err(Error::InvalidValue(format!("𝒰({t}) is not finite")));
        }
        Ok(u)
    }

    pub fn inverse(&self, t: f64) -> Result<Operator> {
        let u = self.value(t)?;
        u.inverse(self.max_condition).map_err(|_| {
            Error::SingularIntertwiner(format!("𝒰({t}) has condition number {:.3e}", u.condition_number()))
        })
    }

    /// `𝒰̇(t)`: analytic when supplied, otherwise a central difference with
    /// step `1e-6·(1+|t|)`.
    pub fn derivative(&self, t: f64) -> Result<Operator> {
        if let Some(udot) = &self.udot_fn {
            self.value(t)?;
            return udot(t);
        }
        let h = VELOCITY_FD_STEP * (1.0 + t.abs());
        let (lo, hi) = self.domain;
        if t - h < lo || t + h > hi {
            return Err(Error::Boundary(format!("no room for a central difference of 𝒰 at t={t}")));
        }
        Ok((&self.value(t + h)? - &self.value(t - h)?).scale_real(0.5 / h))
    }
}

fn check_dim(u: &Intertwiner, n: usize, what: &str) -> Result<()> {
    if u.dim != n {
        return Err(Error::Dimension(format!("intertwiner has N={}, {what} has N={n}", u.dim)));
    }
    Ok(())
}

/// `𝒰 O 𝒰⁻¹`.
pub fn transform_observable(u: &Intertwiner, o: &Operator, t: f64) -> Result<Operator> {
    check_dim(u, o.dim(), "observable")?;
    Ok(&(&u.value(t)? * o) * &u.inverse(t)?)
}

/// `𝒰 H 𝒰⁻¹ + iħ 𝒰̇ 𝒰⁻¹`.
pub fn transform_hamiltonian<F>(u: &Intertwiner, h: F, t: f64, hbar: f64) -> Result<Operator>
where
    F: Fn(f64) -> Result<Operator>,
{
    check_hbar(hbar)?;
    let h = h(t)?;
    check_dim(u, h.dim(), "Hamiltonian")?;
    let u_inv = u.inverse(t)?;
    let conj = &(&u.value(t)? * &h) * &u_inv;
    Ok(&conj + &(&u.derivative(t)? * &u_inv).scale(I * hbar))
}

/// `‖iħ 𝒰̇ − H₂𝒰 + 𝒰H₁‖_max`.
pub fn intertwiner_residual(
    u: &Intertwiner,
    pair1: &RepresentationPair,
    pair2: &RepresentationPair,
    t: f64,
    hbar: f64,
) -> Result<f64> {
    check_hbar(hbar)?;
    check_dim(u, pair1.dim(), "pair 1")?;
    check_dim(u, pair2.dim(), "pair 2")?;
    let uv = u.value(t)?;
    let lhs = u.derivative(t)?.scale(I * hbar);
    let rhs = &(&pair2.hamiltonian(t)? * &uv) - &(&uv * &pair1.hamiltonian(t)?);
    Ok(lhs.max_diff(&rhs))
}

/// Largest `|⟨ξ,ζ⟩_{η₁} − ⟨𝒰ξ,𝒰ζ⟩_{η₂}|` over `samples` seeded random
/// unit vectors, taking every pair `(ξ, ζ)` including `ξ = ζ`.
pub fn check_unitarity(
    u: &Intertwiner,
    eta1: &MetricOperator,
    eta2: &MetricOperator,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_dim(u, eta1.dim(), "η₁")?;
    check_dim(u, eta2.dim(), "η₂")?;
    let uv = u.value(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<StateVector> = (0..samples.max(1))
        .map(|_| random::state(u.dim, &mut rng).normalized())
        .collect::<Result<_>>()?;
    let mapped: Vec<StateVector> = states.iter().map(|s| uv.apply(s)).collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for i in 0..states.len() {
        for j in i..states.len() {
            let before = metric_inner_product(eta1, &states[i], &states[j])?;
            let after = metric_inner_product(eta2, &mapped[i], &mapped[j])?;
            worst = worst.max((before - after).norm());
        }
    }
    Ok(worst)
}

/// `H_E(t) = H(t) − H_A(t)`.
pub fn energy_observable<F>(h: F, field: &GaugeField, curve: &ParameterCurve, t: f64, hbar: f64) -> Result<Operator>
where
    F: Fn(f64) -> Result<Operator>,
{
    let total = h(t)?;
    if total.dim() != field.dim() {
        return Err(Error::Dimension(format!(
            "Hamiltonian has N={}, gauge field has N={}",
            total.dim(),
            field.dim()
        )));
    }
    Ok(&total - &connection_hamiltonian(field, curve, t, hbar)?)
}

/// `|⟨O₁⟩_{ξ₁, η₁} − ⟨𝒰O₁𝒰⁻¹⟩_{𝒰ξ₁, η₂}|`.
pub fn expectation_invariance(
    u: &Intertwiner,
    o1: &Operator,
    xi1: &StateVector,
    eta1: &MetricOperator,
    eta2: &MetricOperator,
    t: f64,
) -> Result<f64> {
    check_dim(u, o1.dim(), "observable")?;
    check_dim(u, eta1.dim(), "η₁")?;
    check_dim(u, eta2.dim(), "η₂")?;
    let before = expectation_value(o1, xi1, Some(eta1))?;
    let o2 = transform_observable(u, o1, t)?;
    let xi2 = u.value(t)?.apply(xi1)?;
    let after = expectation_value(&o2, &xi2, Some(eta2))?;
    Ok((before - after).norm())
}

/// Worst intertwiner residual and unitarity deviation over a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceProfile {
    pub max_residual: f64,
    pub max_unitarity_deviation: f64,
}

pub fn equivalence_profile(
    u: &Intertwiner,
    pair1: &RepresentationPair,
    pair2: &RepresentationPair,
    grid: &TimeGrid,
    hbar: f64,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceProfile> {
    let mut profile = EquivalenceProfile {
        max_residual: 0.0,
        max_unitarity_deviation: 0.0,
    };
    for t in grid.times() {
        profile.max_residual = profile.max_residual.max(intertwiner_residual(u, pair1, pair2, t, hbar)?);
        profile.max_unitarity_deviation = profile
            .max_unitarity_deviation
            .max(check_unitarity(u, pair1.metric(), pair2.metric(), t, samples, seed)?);
    }
    Ok(profile)
}
