//! Time-dependent inner products for a possibly non-Hermitian generator.
//!
//! With `iħ dψ/dt = 𝓗(t) ψ` and evolution operator `U(t)`, the metric
//! `η(t) = U(t)⁻¹† η₀ U(t)⁻¹` keeps `⟨ψ₁(t), η(t) ψ₂(t)⟩` constant. Its
//! positive square root `ρ(t)` maps the system to a Hermitian picture with
//! Hamiltonian `h = ρ𝓗ρ⁻¹ + iħ ρ̇ρ⁻¹`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::integrator::{check_hbar, evolve_states, propagators, Integrator, TimeGrid};
use crate::linalg::{hermitian_sqrt_with, metric_inner_product, MetricOperator, Operator, StateVector, Tolerances, C64, I};

/// `t ↦ 𝓗(t)`, no Hermiticity requirement.
#[derive(Clone)]
pub struct NonHermitianGenerator {
    dim: usize,
    h_fn: Arc<dyn Fn(f64) -> Result<Operator> + Send + Sync>,
}

impl fmt::Debug for NonHermitianGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonHermitianGenerator").field("dim", &self.dim).finish()
    }
}

impl NonHermitianGenerator {
    pub fn new<F>(dim: usize, h: F) -> Self
    where
        F: Fn(f64) -> Result<Operator> + Send + Sync + 'static,
    {
        Self { dim, h_fn: Arc::new(h) }
    }

    pub fn constant(h: Operator) -> Self {
        Self::new(h.dim(), move |_| Ok(h.clone()))
    }

    /// `[[r e^{iθ}, s], [s, r e^{−iθ}]]`, a two-level family with real
    /// spectrum `r cos θ ± √(s² − r² sin² θ)` while `s² > r² sin² θ`.
    pub fn pt_twolevel(r: f64, theta: f64, s: f64) -> Result<Self> {
        let h = Operator::from_rows(&[
            vec![C64::from_polar(r, theta), C64::new(s, 0.0)],
            vec![C64::new(s, 0.0), C64::from_polar(r, -theta)],
        ])?;
        Ok(Self::constant(h))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, t: f64) -> Result<Operator> {
        let h = (self.h_fn)(t)?;
        if h.dim() != self.dim {
            return Err(Error::Dimension(format!("𝓗({t}) has dimension {}, expected {}", h.dim(), self.dim)));
        }
        if !h.is_finite() {
            return Err(Error::InvalidValue(format!("𝓗({t}) is not finite")));
        }
        Ok(h)
    }
}

/// `U(t_k, t_0)` on a grid; `U(t_0) = I`.
#[derive(Clone, Debug)]
pub struct EvolutionOperator {
    pub grid: TimeGrid,
    pub ops: Vec<Operator>,
}

pub fn evolution_operator(
    gen: &NonHermitianGenerator,
    grid: &TimeGrid,
    hbar: f64,
    integrator: Integrator,
) -> Result<EvolutionOperator> {
    let h = |t: f64| gen.value(t);
    Ok(EvolutionOperator {
        grid: *grid,
        ops: propagators(&h, grid, hbar, integrator)?,
    })
}

/// `η(t_k)` on a grid with `η(t_0) = η₀`.
#[derive(Clone, Debug)]
pub struct MetricTrajectory {
    grid: TimeGrid,
    eta: Vec<MetricOperator>,
}

impl MetricTrajectory {
    pub fn from_parts(grid: TimeGrid, eta: Vec<MetricOperator>) -> Result<Self> {
        if eta.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} metrics for a grid of {} times",
                eta.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, eta })
    }

    /// `η(t) = η₀` at every grid time.
    pub fn frozen(grid: TimeGrid, eta0: MetricOperator) -> Self {
        Self {
            eta: vec![eta0; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn eta(&self) -> &[MetricOperator] {
        &self.eta
    }

    pub fn eta0(&self) -> &MetricOperator {
        &self.eta[0]
    }

    pub fn at(&self, t: f64) -> Result<&MetricOperator> {
        Ok(&self.eta[grid_index(&self.grid, t)?])
    }

    /// Copy with `η(t_k)` multiplied by `factor`; used to probe how sharply
    /// the residual checks react to an inconsistent trajectory.
    pub fn scaled_at(&self, k: usize, factor: f64) -> Result<Self> {
        let mut eta = self.eta.clone();
        let target = eta
            .get(k)
            .ok_or_else(|| Error::InvalidValue(format!("grid index {k} out of range")))?;
        eta[k] = MetricOperator::new(target.op().scale_real(factor))?;
        Ok(Self { grid: self.grid, eta })
    }
}

/// Primary route: congruence through the evolution operator, never by
/// integrating the metric equation directly.
pub fn evolve_metric(
    gen: &NonHermitianGenerator,
    eta0: &MetricOperator,
    grid: &TimeGrid,
    hbar: f64,
    integrator: Integrator,
) -> Result<MetricTrajectory> {
    evolve_metric_with(gen, eta0, grid, hbar, integrator, &Tolerances::default())
}

pub fn evolve_metric_with(
    gen: &NonHermitianGenerator,
    eta0: &MetricOperator,
    grid: &TimeGrid,
    hbar: f64,
    integrator: Integrator,
    tol: &Tolerances,
) -> Result<MetricTrajectory> {
    if eta0.dim() != gen.dim() {
        return Err(Error::Dimension(format!(
            "η₀ has dimension {}, generator has {}",
            eta0.dim(),
            gen.dim()
        )));
    }
    let evolution = evolution_operator(gen, grid, hbar, integrator)?;
    let mut eta = Vec::with_capacity(grid.len());
    eta.push(eta0.clone());
    for (k, u) in evolution.ops.iter().enumerate().skip(1) {
        let u_inv = u.inverse(tol.max_condition).map_err(|_| {
            Error::SingularEvolution(format!(
                "U(t={}) has condition number {:.3e}",
                grid.time(k),
                u.condition_number()
            ))
        })?;
        let raw = &(&u_inv.adjoint() * eta0.op()) * &u_inv;
        let symmetric = (&raw + &raw.adjoint()).scale_real(0.5);
        eta.push(MetricOperator::with_tolerances(symmetric, tol)?);
    }
    Ok(MetricTrajectory { grid: *grid, eta })
}

/// Index of grid time `t`.
pub fn grid_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    grid.index_of(t)
        .ok_or_else(|| Error::InvalidValue(format!("t={t} is not a grid time")))
}

/// Time derivative of grid samples at index `k`, fourth order throughout:
/// the five-point central stencil in the interior, a five-point stencil
/// shifted by one next to either end, and [`Error::Boundary`] at the ends
/// themselves. Grids shorter than five points fall back to the three-point
/// central difference.
pub fn grid_derivative(values: &[Operator], grid: &TimeGrid, k: usize) -> Result<Operator> {
    let n = values.len();
    if n != grid.len() {
        return Err(Error::Dimension(format!("{n} samples for a grid of {} times", grid.len())));
    }
    if k == 0 || k + 1 >= n {
        return Err(Error::Boundary(format!("no central difference at grid end t={}", grid.time(k.min(n - 1)))));
    }
    let dt = grid.dt();
    let combo = |start: usize, weights: &[f64]| -> Operator {
        let mut acc = Operator::zeros(values[k].dim());
        for (j, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                acc = &acc + &values[start + j].scale_real(*w);
            }
        }
        acc.scale_real(1.0 / (12.0 * dt))
    };
    Ok(if n < 5 {
        (&values[k + 1] - &values[k - 1]).scale_real(0.5 / dt)
    } else if k == 1 {
        combo(0, &[-3.0, -10.0, 18.0, -6.0, 1.0])
    } else if k + 2 == n {
        combo(n - 5, &[-1.0, 6.0, -18.0, 10.0, 3.0])
    } else {
        combo(k - 2, &[1.0, -8.0, 0.0, 8.0, -1.0])
    })
}

fn stencil(k: usize, n: usize) -> std::ops::Range<usize> {
    if n < 5 {
        return k - 1..k + 2;
    }
    let lo = k.saturating_sub(2).min(n - 5);
    lo..lo + 5
}

/// Derivative at `k` of `f(j)` evaluated only on the stencil around `k`.
fn derivative_of<F>(grid: &TimeGrid, k: usize, f: F) -> Result<Operator>
where
    F: Fn(usize) -> Result<Operator>,
{
    let n = grid.len();
    if k == 0 || k + 1 >= n {
        return Err(Error::Boundary(format!("no central difference at grid end t={}", grid.time(k.min(n - 1)))));
    }
    let range = stencil(k, n);
    let dim = f(k)?.dim();
    let mut samples = vec![Operator::zeros(dim); n];
    for j in range {
        samples[j] = f(j)?;
    }
    grid_derivative(&samples, grid, k)
}

fn check_pair(gen: &NonHermitianGenerator, traj: &MetricTrajectory) -> Result<()> {
    if traj.eta0().dim() != gen.dim() {
        return Err(Error::Dimension(format!(
            "metric has dimension {}, generator has {}",
            traj.eta0().dim(),
            gen.dim()
        )));
    }
    Ok(())
}

/// `‖iħ η̇ − (𝓗†η − η𝓗)‖_max` at grid time `t`.
pub fn metric_residual(gen: &NonHermitianGenerator, traj: &MetricTrajectory, t: f64, hbar: f64) -> Result<f64> {
    check_hbar(hbar)?;
    check_pair(gen, traj)?;
    let k = grid_index(&traj.grid, t)?;
    let deta = derivative_of(&traj.grid, k, |j| Ok(traj.eta[j].op().clone()))?;
    let h = gen.value(t)?;
    let eta = traj.eta[k].op();
    let rhs = &(&h.adjoint() * eta) - &(eta * &h);
    Ok(deta.scale(I * hbar).max_diff(&rhs))
}

/// `‖𝓗† − η𝓗η⁻¹ − iħ η̇ η⁻¹‖_max` at grid time `t`.
pub fn pseudo_hermiticity_defect(gen: &NonHermitianGenerator, traj: &MetricTrajectory, t: f64, hbar: f64) -> Result<f64> {
    check_hbar(hbar)?;
    check_pair(gen, traj)?;
    let k = grid_index(&traj.grid, t)?;
    let deta = derivative_of(&traj.grid, k, |j| Ok(traj.eta[j].op().clone()))?;
    let h = gen.value(t)?;
    let eta = traj.eta[k].op();
    let eta_inv = invert_metric(eta)?;
    let predicted = &(&(eta * &h) * &eta_inv) + &(&deta * &eta_inv).scale(I * hbar);
    Ok(h.adjoint().max_diff(&predicted))
}

fn invert_metric(eta: &Operator) -> Result<Operator> {
    eta.inverse(Tolerances::default().max_condition)
        .map_err(|e| Error::SingularMetric(e.to_string()))
}

/// Evolves both states under `𝓗` and returns
/// `max_k |⟨ψ₁, ψ₂⟩_{η(t_k)} − ⟨ψ₁, ψ₂⟩_{η(t_0)}|`.
pub fn invariance_check(
    gen: &NonHermitianGenerator,
    traj: &MetricTrajectory,
    psi1: &StateVector,
    psi2: &StateVector,
    hbar: f64,
    integrator: Integrator,
) -> Result<f64> {
    check_pair(gen, traj)?;
    for psi in [psi1, psi2] {
        if psi.norm() == 0.0 {
            return Err(Error::ZeroState);
        }
    }
    let h = |t: f64| gen.value(t);
    let a = evolve_states(&h, psi1, &traj.grid, hbar, integrator)?;
    let b = evolve_states(&h, psi2, &traj.grid, hbar, integrator)?;
    let initial = metric_inner_product(&traj.eta[0], psi1, psi2)?;
    let mut worst = 0.0_f64;
    for ((x, y), eta) in a.iter().zip(&b).zip(&traj.eta) {
        worst = worst.max((metric_inner_product(eta, x, y)? - initial).norm());
    }
    Ok(worst)
}

/// `h(t) = ρ𝓗ρ⁻¹ + iħ ρ̇ρ⁻¹` with `ρ = √η`, at grid time `t`.
pub fn hermitize(gen: &NonHermitianGenerator, traj: &MetricTrajectory, t: f64, hbar: f64) -> Result<Operator> {
    check_hbar(hbar)?;
    check_pair(gen, traj)?;
    let tol = Tolerances::default();
    let k = grid_index(&traj.grid, t)?;
    let rho_at = |j: usize| hermitian_sqrt_with(traj.eta[j].op(), &tol);
    let drho = derivative_of(&traj.grid, k, rho_at)?;
    let rho = rho_at(k)?;
    let rho_inv = invert_metric(&rho)?;
    twisted_conjugate(&gen.value(t)?, &rho, &rho_inv, &drho, hbar)
}

/// `X H X⁻¹ + iħ Ẋ X⁻¹`.
fn twisted_conjugate(h: &Operator, x: &Operator, x_inv: &Operator, dx: &Operator, hbar: f64) -> Result<Operator> {
    Ok(&(&(x * h) * x_inv) + &(dx * x_inv).scale(I * hbar))
}

pub type UnitaryPath = Arc<dyn Fn(f64) -> Result<Operator> + Send + Sync>;

/// `ρ(t_k)` and `𝒜(t_k) = u(t_k) ρ(t_k)` on the trajectory grid.
#[derive(Clone, Debug)]
pub struct Dressing {
    pub grid: TimeGrid,
    pub rho: Vec<Operator>,
    pub u: Vec<Operator>,
    pub dressed: Vec<Operator>,
}

/// Builds `𝒜 = uρ`; `u` defaults to the identity.
pub fn dress(traj: &MetricTrajectory, u_fn: Option<&UnitaryPath>) -> Result<Dressing> {
    let tol = Tolerances::default();
    let n = traj.eta0().dim();
    let times = traj.grid.times();
    let mut rho = Vec::with_capacity(times.len());
    let mut us = Vec::with_capacity(times.len());
    let mut dressed = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let r = hermitian_sqrt_with(traj.eta[k].op(), &tol)?;
        let u = match u_fn {
            None => Operator::identity(n),
            Some(f) => {
                let u = f(t)?;
                if u.dim() != n {
                    return Err(Error::Dimension(format!("u({t}) has dimension {}, expected {n}", u.dim())));
                }
                let defect = u.unitarity_defect();
                if !(defect <= tol.unitary) {
                    return Err(Error::NonUnitary(format!("u({t}) (defect {defect:.3e})")));
                }
                u
            }
        };
        let a = &u * &r;
        let eta = traj.eta[k].op();
        let mismatch = (&a.adjoint() * &a).max_diff(eta);
        if mismatch > tol.sqrt * eta.max_abs().max(1.0) {
            return Err(Error::InvalidValue(format!("𝒜†𝒜 differs from η by {mismatch:.3e} at t={t}")));
        }
        rho.push(r);
        us.push(u);
        dressed.push(a);
    }
    Ok(Dressing {
        grid: traj.grid,
        rho,
        u: us,
        dressed,
    })
}

/// `h_𝒜(t) = 𝒜𝓗𝒜⁻¹ + iħ 𝒜̇𝒜⁻¹` at grid time `t`.
pub fn dressed_hermitize(gen: &NonHermitianGenerator, dressing: &Dressing, t: f64, hbar: f64) -> Result<Operator> {
    check_hbar(hbar)?;
    let k = grid_index(&dressing.grid, t)?;
    let da = grid_derivative(&dressing.dressed, &dressing.grid, k)?;
    let a = &dressing.dressed[k];
    if a.dim() != gen.dim() {
        return Err(Error::Dimension("dressing and generator differ in dimension".into()));
    }
    let a_inv = invert_metric(a)?;
    twisted_conjugate(&gen.value(t)?, a, &a_inv, &da, hbar)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::{hermiticity_defect, matrix_exp, pseudo_adjoint, random};

    const K: f64 = 4.0;

    /// `[[0, 1], [k, 0]]`, spectrum `±√k`.
    fn k_generator() -> NonHermitianGenerator {
        NonHermitianGenerator::constant(Operator::from_real_rows(&[&[0.0, 1.0], &[K, 0.0]]).unwrap())
    }

    /// `exp(−it𝓗)` for the k-example from `𝓗² = k I`:
    /// `cos(√k t) I − i sin(√k t)/√k 𝓗`.
    fn k_propagator(t: f64) -> Operator {
        let w = K.sqrt();
        let h = Operator::from_real_rows(&[&[0.0, 1.0], &[K, 0.0]]).unwrap();
        &Operator::identity(2).scale_real((w * t).cos()) + &h.scale(-I * ((w * t).sin() / w))
    }

    fn k_grid() -> TimeGrid {
        TimeGrid::new(0.0, 1.0, 2000).unwrap()
    }

    fn k_trajectory() -> MetricTrajectory {
        evolve_metric(&k_generator(), &MetricOperator::identity(2), &k_grid(), 1.0, Integrator::default()).unwrap()
    }

    #[test]
    fn evolution_operator_examples() {
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let zero = evolution_operator(&NonHermitianGenerator::constant(Operator::zeros(2)), &grid, 1.0, Integrator::default())
            .unwrap();
        assert!(zero.ops.iter().all(|u| *u == Operator::identity(2)));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random::hermitian(3, &mut rng);
        let u = evolution_operator(&NonHermitianGenerator::constant(h.clone()), &grid, 0.5, Integrator::default()).unwrap();
        for (t, op) in grid.times().iter().zip(&u.ops) {
            assert!(op.max_diff(&matrix_exp(&h.scale(-I * (*t / 0.5)))) < 1e-9);
            assert!(op.unitarity_defect() < 1e-9);
        }

        let u = evolution_operator(&k_generator(), &grid, 1.0, Integrator::default()).unwrap();
        for (t, op) in grid.times().iter().zip(&u.ops) {
            assert!(op.max_diff(&k_propagator(*t)) < 1e-8);
        }
    }

    #[test]
    fn evolve_metric_examples() {
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let herm = NonHermitianGenerator::constant(random::hermitian(2, &mut rng));
        let traj = evolve_metric(&herm, &MetricOperator::identity(2), &grid, 1.0, Integrator::default()).unwrap();
        assert!(traj.eta().iter().all(|e| e.op().max_diff(&Operator::identity(2)) < 1e-10));

        let eta0 = MetricOperator::new(random::positive(2, &mut rng)).unwrap();
        let zero = NonHermitianGenerator::constant(Operator::zeros(2));
        let traj = evolve_metric(&zero, &eta0, &grid, 1.0, Integrator::default()).unwrap();
        assert!(traj.eta().iter().all(|e| e.op() == eta0.op()));

        let traj = k_trajectory();
        assert_eq!(traj.eta0().op(), &Operator::identity(2));
        for (t, eta) in traj.times().iter().zip(traj.eta()).step_by(100) {
            let u_inv = k_propagator(*t).inverse(1e12).unwrap();
            let exact = &u_inv.adjoint() * &u_inv;
            assert!(eta.op().max_diff(&exact) < 1e-8, "t={t}");
            assert!(eta.eigen_range().0 > 0.0);
        }
    }

    #[test]
    fn singular_evolution_is_reported() {
        // Strongly non-normal growth: exp(−it𝓗) with 𝓗 = −i·diag(40, −40)
        // has condition number e^{80 t}.
        let h = Operator::diagonal(&[C64::new(0.0, -40.0), C64::new(0.0, 40.0)]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let res = evolve_metric(
            &NonHermitianGenerator::constant(h),
            &MetricOperator::identity(2),
            &grid,
            1.0,
            Integrator::default(),
        );
        assert!(matches!(res, Err(Error::SingularEvolution(_))));
    }

    #[test]
    fn residual_examples() {
        let grid = TimeGrid::new(0.0, 1.0, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let herm = NonHermitianGenerator::constant(random::hermitian(2, &mut rng));
        let id = MetricTrajectory::frozen(grid, MetricOperator::identity(2));
        assert!(metric_residual(&herm, &id, grid.time(20), 1.0).unwrap() <= 1e-10);
        assert!(pseudo_hermiticity_defect(&herm, &id, grid.time(20), 1.0).unwrap() <= 1e-10);

        let traj = k_trajectory();
        let g = *traj.grid();
        for k in [1, 2, 500, 1000, 1998, 1999] {
            let t = g.time(k);
            let r = metric_residual(&k_generator(), &traj, t, 1.0).unwrap();
            assert!(r <= 1e-6, "k={k}: {r}");
            assert!(pseudo_hermiticity_defect(&k_generator(), &traj, t, 1.0).unwrap() <= 1e-6, "k={k}");
        }
        for k in [0, 2000] {
            assert!(matches!(
                metric_residual(&k_generator(), &traj, g.time(k), 1.0),
                Err(Error::Boundary(_))
            ));
        }
        assert!(matches!(
            metric_residual(&k_generator(), &traj, 0.00025, 1.0),
            Err(Error::InvalidValue(_))
        ));

        let corrupted = traj.scaled_at(1000, 1.0 + 1e-3).unwrap();
        assert!(metric_residual(&k_generator(), &corrupted, g.time(1000), 1.0).unwrap() > 1e-4);
        assert!(metric_residual(&k_generator(), &corrupted, g.time(1001), 1.0).unwrap() > 1e-4);
    }

    #[test]
    fn printed_sign_convention_is_inconsistent() {
        // iħη̇ = η𝓗 − 𝓗†η fails on the exact trajectory; the opposite sign holds.
        let traj = k_trajectory();
        let t = traj.grid().time(1000);
        let k = 1000;
        let deta = grid_derivative(
            &traj.eta().iter().map(|e| e.op().clone()).collect::<Vec<_>>(),
            traj.grid(),
            k,
        )
        .unwrap();
        let h = k_generator().value(t).unwrap();
        let eta = traj.eta()[k].op();
        let printed = &(eta * &h) - &(&h.adjoint() * eta);
        assert!(deta.scale(I).max_diff(&printed) > 1.0);
        assert!(metric_residual(&k_generator(), &traj, t, 1.0).unwrap() < 1e-6);
    }

    #[test]
    fn complex_spectrum_obstruction() {
        // PT family past its exceptional point: eigenvalues r cos θ ± i·√(r² sin² θ − s²).
        let gen = NonHermitianGenerator::pt_twolevel(1.0, 1.2, 0.3).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let id = MetricTrajectory::frozen(grid, MetricOperator::identity(2));
        assert!(pseudo_hermiticity_defect(&gen, &id, grid.time(5), 1.0).unwrap() > 1e-2);
    }

    #[test]
    fn invariance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y) = (random::state(2, &mut rng), random::state(2, &mut rng));
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let herm = NonHermitianGenerator::constant(random::hermitian(2, &mut rng));
        let id = MetricTrajectory::frozen(grid, MetricOperator::identity(2));
        assert!(invariance_check(&herm, &id, &x, &y, 1.0, Integrator::default()).unwrap() <= 1e-9);

        let traj = k_trajectory();
        assert!(invariance_check(&k_generator(), &traj, &x, &y, 1.0, Integrator::default()).unwrap() <= 1e-7);
        let frozen = MetricTrajectory::frozen(*traj.grid(), MetricOperator::identity(2));
        assert!(invariance_check(&k_generator(), &frozen, &x, &y, 1.0, Integrator::default()).unwrap() > 1e-3);
        let zero = StateVector::new(vec![C64::new(0.0, 0.0); 2]).unwrap();
        assert!(matches!(
            invariance_check(&k_generator(), &traj, &zero, &y, 1.0, Integrator::default()),
            Err(Error::ZeroState)
        ));
    }

    #[test]
    fn hermitize_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let h = random::hermitian(3, &mut rng);
        let herm = NonHermitianGenerator::constant(h.clone());
        let id = MetricTrajectory::frozen(grid, MetricOperator::identity(3));
        assert!(hermitize(&herm, &id, grid.time(7), 1.0).unwrap().max_diff(&h) < 1e-12);

        // Static pseudo-Hermitian pair: 𝓗 = η⁻¹ K for Hermitian K, so η𝓗η⁻¹ = K η⁻¹ = 𝓗†.
        let eta = MetricOperator::new(random::positive(3, &mut rng)).unwrap();
        let kop = random::hermitian(3, &mut rng);
        let eta_inv = eta.op().inverse(1e12).unwrap();
        let gen = NonHermitianGenerator::constant(&eta_inv * &kop);
        let fixed = MetricTrajectory::frozen(grid, eta.clone());
        let out = hermitize(&gen, &fixed, grid.time(10), 1.0).unwrap();
        assert!(hermiticity_defect(&out) < 1e-10);

        let traj = k_trajectory();
        for k in [1, 2, 1000, 1999] {
            let out = hermitize(&k_generator(), &traj, traj.grid().time(k), 1.0).unwrap();
            assert!(hermiticity_defect(&out) <= 1e-6, "k={k}: {}", hermiticity_defect(&out));
        }
    }

    fn rotating_unitary(omega: f64, kop: Operator) -> UnitaryPath {
        Arc::new(move |t: f64| Ok(matrix_exp(&kop.scale(-I * omega * t))))
    }

    #[test]
    fn dressing_examples() {
        let traj = k_trajectory();
        let plain = dress(&traj, None).unwrap();
        assert_eq!(plain.rho, plain.dressed);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let kop = random::hermitian(2, &mut rng);
        let omega = 0.9;
        let u_fn = rotating_unitary(omega, kop.clone());
        let dressed = dress(&traj, Some(&u_fn)).unwrap();
        for (a, eta) in dressed.dressed.iter().zip(traj.eta()) {
            assert!((&a.adjoint() * a).max_diff(eta.op()) < 1e-10);
        }

        for k in [1, 700, 1999] {
            let t = traj.grid().time(k);
            let h = hermitize(&k_generator(), &traj, t, 1.0).unwrap();
            let same = dressed_hermitize(&k_generator(), &plain, t, 1.0).unwrap();
            assert!(same.max_diff(&h) < 1e-12);

            let ha = dressed_hermitize(&k_generator(), &dressed, t, 1.0).unwrap();
            assert!(hermiticity_defect(&ha) <= 1e-6, "k={k}: {}", hermiticity_defect(&ha));
            // Two-term formula with analytic u̇ = −iωK u.
            let u = u_fn(t).unwrap();
            let udot = (&kop * &u).scale(-I * omega);
            let expected = &(&(&u * &h) * &u.adjoint()) + &(&udot * &u.adjoint()).scale(I);
            assert!(ha.max_diff(&expected) <= 1e-6, "k={k}: {}", ha.max_diff(&expected));
        }

        let fixed_u = random::unitary(2, &mut rng);
        let constant: UnitaryPath = {
            let u = fixed_u.clone();
            Arc::new(move |_| Ok(u.clone()))
        };
        let dressed = dress(&traj, Some(&constant)).unwrap();
        let t = traj.grid().time(400);
        let h = hermitize(&k_generator(), &traj, t, 1.0).unwrap();
        let ha = dressed_hermitize(&k_generator(), &dressed, t, 1.0).unwrap();
        assert!(ha.max_diff(&(&(&fixed_u * &h) * &fixed_u.adjoint())) <= 1e-8);

        let bad: UnitaryPath = Arc::new(|_| Ok(Operator::identity(2).scale_real(1.1)));
        assert!(matches!(dress(&traj, Some(&bad)), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn hermitian_picture_matches_dressed_states() {
        // Ψ evolves under h on a grid of half the resolution, so every
        // midpoint it needs is an interior metric grid time.
        let traj = k_trajectory();
        let fine = *traj.grid();
        let coarse = TimeGrid::new(fine.start(), fine.end(), fine.steps() / 2).unwrap();
        let h_of = |t: f64| hermitize(&k_generator(), &traj, fine.time(grid_index(&fine, t)?), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi0 = random::state(2, &mut rng);
        let gen = k_generator();
        let psi = evolve_states(&|t| gen.value(t), &psi0, &coarse, 1.0, Integrator::default()).unwrap();
        let rho = dress(&traj, None).unwrap().rho;
        let big_psi0 = rho[0].apply(&psi0).unwrap();
        let big_psi = evolve_states(&h_of, &big_psi0, &coarse, 1.0, Integrator::default()).unwrap();
        for k in 0..coarse.len() {
            let mapped = rho[2 * k].apply(&psi[k]).unwrap();
            assert!(mapped.max_diff(&big_psi[k]) <= 1e-6, "k={k}: {}", mapped.max_diff(&big_psi[k]));
        }
    }

    #[test]
    fn observables_are_pseudo_hermitian() {
        let traj = k_trajectory();
        let rho = dress(&traj, None).unwrap().rho;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in [0, 333, 2000] {
            let o = random::hermitian(2, &mut rng);
            let rho_inv = rho[k].inverse(1e12).unwrap();
            let big_o = &(&rho_inv * &o) * &rho[k];
            let eta = traj.eta()[k].op();
            let rhs = &(eta * &big_o) * &eta.inverse(1e12).unwrap();
            assert!(big_o.adjoint().max_diff(&rhs) <= 1e-8);
        }
    }

    #[test]
    fn generator_is_not_an_observable() {
        let traj = k_trajectory();
        let h = k_generator().value(0.5).unwrap();
        let eta = traj.at(0.5).unwrap();
        assert!(pseudo_adjoint(eta, &h).unwrap().max_diff(&h) > 1e-3);
    }

    #[test]
    fn grid_derivative_orders() {
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let values: Vec<Operator> = grid.times().iter().map(|t| Operator::identity(1).scale_real(t.powi(4))).collect();
        // Five-point stencil is exact for quartics.
        let d = grid_derivative(&values, &grid, 10).unwrap();
        assert!((d.get(0, 0).re - 4.0 * 0.5f64.powi(3)).abs() < 1e-12);
        assert!(matches!(grid_derivative(&values, &grid, 0), Err(Error::Boundary(_))));
        assert!(matches!(grid_derivative(&values, &grid, 20), Err(Error::Boundary(_))));
        for k in [1, 19] {
            let d = grid_derivative(&values, &grid, k).unwrap().get(0, 0).re;
            assert!((d - 4.0 * grid.time(k).powi(3)).abs() < 1e-12, "k={k}");
        }
    }
}
