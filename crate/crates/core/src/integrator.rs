//! Time grids and one-step propagators for `iħ dY/dt = H(t) Y`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, Operator, StateVector, I};

/// Uniform grid `t_k = t0 + k (t1 − t0) / steps`, `k = 0..=steps`.
/// `t1 < t0` integrates backwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidValue("grid bounds must be finite".into()));
        }
        if t0 == t1 {
            return Err(Error::InvalidValue("grid start and end coincide".into()));
        }
        if steps == 0 {
            return Err(Error::InvalidValue("grid needs at least one step".into()));
        }
        Ok(Self { t0, t1, steps })
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed spacing.
    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Index of the grid point at `t`, to within `1e-9·|dt|`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        ((self.time(k) - t).abs() <= 1e-9 * self.dt().abs().max(1e-300)).then_some(k)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// `exp(−i dt H(t + dt/2)/ħ)`, second order, exactly unitary for Hermitian H.
    #[default]
    ExponentialMidpoint,
    /// Commutator-free fourth-order Magnus scheme with two Gauss nodes.
    /// Also exactly unitary for Hermitian H.
    Magnus4,
    /// Classical explicit Runge–Kutta, fourth order, not norm-preserving.
    Rk4,
}

impl Integrator {
    pub fn id(&self) -> &'static str {
        match self {
            Integrator::ExponentialMidpoint => "exponential_midpoint",
            Integrator::Magnus4 => "magnus4",
            Integrator::Rk4 => "rk4",
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            Integrator::ExponentialMidpoint => 2,
            Integrator::Magnus4 | Integrator::Rk4 => 4,
        }
    }

    /// Propagator over `[t, t + dt]`.
    pub fn step<F>(&self, hamiltonian: &F, t: f64, dt: f64, hbar: f64) -> Result<Operator>
    where
        F: Fn(f64) -> Result<Operator> + ?Sized,
    {
        let factor = -I * (dt / hbar);
        let u = match self {
            Integrator::ExponentialMidpoint => matrix_exp(&hamiltonian(t + 0.5 * dt)?.scale(factor)),
            Integrator::Magnus4 => {
                let s = 3f64.sqrt();
                let (c1, c2) = (0.5 - s / 6.0, 0.5 + s / 6.0);
                let (a1, a2) = ((3.0 - 2.0 * s) / 12.0, (3.0 + 2.0 * s) / 12.0);
                let h1 = hamiltonian(t + c1 * dt)?;
                let h2 = hamiltonian(t + c2 * dt)?;
                let first = matrix_exp(&(&h1.scale_real(a2) + &h2.scale_real(a1)).scale(factor));
                let second = matrix_exp(&(&h1.scale_real(a1) + &h2.scale_real(a2)).scale(factor));
                &second * &first
            }
            Integrator::Rk4 => {
                let rhs = |s: f64| -> Result<Operator> { Ok(hamiltonian(s)?.scale(-I / hbar)) };
                let n = hamiltonian(t)?.dim();
                let id = Operator::identity(n);
                let k1 = rhs(t)?;
                let mid = rhs(t + 0.5 * dt)?;
                let k2 = &mid * &(&id + &k1.scale_real(0.5 * dt));
                let k3 = &mid * &(&id + &k2.scale_real(0.5 * dt));
                let k4 = &rhs(t + dt)? * &(&id + &k3.scale_real(dt));
                let incr = &(&(&k1 + &k2.scale_real(2.0)) + &k3.scale_real(2.0)) + &k4;
                &id + &incr.scale_real(dt / 6.0)
            }
        };
        if !u.is_finite() {
            return Err(Error::Integration(format!("non-finite propagator at t={t}")));
        }
        Ok(u)
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential_midpoint" | "midpoint" => Ok(Integrator::ExponentialMidpoint),
            "magnus4" => Ok(Integrator::Magnus4),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(Error::InvalidValue(format!(
                "unknown integrator `{other}` (expected exponential_midpoint, magnus4 or rk4)"
            ))),
        }
    }
}

/// Cumulative propagators `U(t_k, t_0)` on the grid, `U(t_0) = I` exactly.
pub fn propagators<F>(hamiltonian: &F, grid: &TimeGrid, hbar: f64, integrator: Integrator) -> Result<Vec<Operator>>
where
    F: Fn(f64) -> Result<Operator> + ?Sized,
{
    check_hbar(hbar)?;
    let n = hamiltonian(grid.start())?.dim();
    let mut out = Vec::with_capacity(grid.len());
    out.push(Operator::identity(n));
    for k in 0..grid.steps() {
        let t = grid.time(k);
        let step = integrator.step(hamiltonian, t, grid.time(k + 1) - t, hbar)?;
        let next = &step * &out[k];
        out.push(next);
    }
    Ok(out)
}

/// States `Ψ(t_k)` with `Ψ(t_0) = psi0`.
pub fn evolve_states<F>(
    hamiltonian: &F,
    psi0: &StateVector,
    grid: &TimeGrid,
    hbar: f64,
    integrator: Integrator,
) -> Result<Vec<StateVector>>
where
    F: Fn(f64) -> Result<Operator> + ?Sized,
{
    check_hbar(hbar)?;
    let mut out = Vec::with_capacity(grid.len());
    out.push(psi0.clone());
    for k in 0..grid.steps() {
        let t = grid.time(k);
        let step = integrator.step(hamiltonian, t, grid.time(k + 1) - t, hbar)?;
        let next = step.apply(&out[k])?;
        if !next.is_finite() {
            return Err(Error::Integration(format!("state diverged at t={}", grid.time(k + 1))));
        }
        out.push(next);
    }
    Ok(out)
}

pub(crate) fn check_hbar(hbar: f64) -> Result<()> {
    if hbar.is_finite() && hbar > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue(format!("ħ must be positive and finite, got {hbar}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, C64};

    #[test]
    fn grid_points() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.index_of(0.75), Some(3));
        assert_eq!(g.index_of(0.7), None);
        let back = TimeGrid::new(1.0, 0.0, 2).unwrap();
        assert_eq!(back.dt(), -0.5);
        assert!(TimeGrid::new(1.0, 1.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn integrator_names_round_trip() {
        for i in [Integrator::ExponentialMidpoint, Integrator::Magnus4, Integrator::Rk4] {
            assert_eq!(i.id().parse::<Integrator>().unwrap(), i);
        }
        assert!("euler".parse::<Integrator>().is_err());
    }

    /// `H(t) = cos(t) σ_x` commutes with itself at all times, so
    /// `U(t) = cos(sin t) I − i sin(sin t) σ_x`.
    fn commuting_error(integrator: Integrator, steps: usize) -> f64 {
        let [sx, _, _] = pauli();
        let h = move |t: f64| Ok(sx.scale_real(t.cos()));
        let grid = TimeGrid::new(0.0, 1.5, steps).unwrap();
        let u = propagators(&h, &grid, 1.0, integrator).unwrap().pop().unwrap();
        let phase = 1.5f64.sin();
        let exact = Operator::from_rows(&[
            vec![C64::new(phase.cos(), 0.0), C64::new(0.0, -phase.sin())],
            vec![C64::new(0.0, -phase.sin()), C64::new(phase.cos(), 0.0)],
        ])
        .unwrap();
        u.max_diff(&exact)
    }

    #[test]
    fn convergence_orders() {
        for integrator in [Integrator::ExponentialMidpoint, Integrator::Magnus4, Integrator::Rk4] {
            let coarse = commuting_error(integrator, 10);
            let fine = commuting_error(integrator, 20);
            let expected = 2f64.powi(integrator.order() as i32);
            let ratio = coarse / fine;
            assert!(
                (ratio / expected - 1.0).abs() <= 0.2,
                "{integrator}: ratio {ratio}, expected {expected}"
            );
        }
    }

    #[test]
    fn unitary_schemes_preserve_norm() {
        let [sx, sy, sz] = pauli();
        let h = move |t: f64| Ok(&(&sx.scale_real(t.cos()) + &sy.scale_real(t * t)) + &sz);
        let grid = TimeGrid::new(0.0, 3.0, 17).unwrap();
        let psi = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        for integrator in [Integrator::ExponentialMidpoint, Integrator::Magnus4] {
            for s in evolve_states(&h, &psi, &grid, 0.7, integrator).unwrap() {
                assert!((s.norm() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = |_: f64| Ok(Operator::zeros(3));
        let grid = TimeGrid::new(0.0, 1.0, 5).unwrap();
        for integrator in [Integrator::ExponentialMidpoint, Integrator::Magnus4, Integrator::Rk4] {
            for u in propagators(&h, &grid, 1.0, integrator).unwrap() {
                assert_eq!(u, Operator::identity(3));
            }
        }
    }

    #[test]
    fn bad_hbar_is_rejected() {
        let h = |_: f64| Ok(Operator::zeros(2));
        let grid = TimeGrid::new(0.0, 1.0, 5).unwrap();
        assert!(matches!(
            propagators(&h, &grid, 0.0, Integrator::Rk4),
            Err(Error::InvalidValue(_))
        ));
    }
}
