//! Invariant checks evaluated against a built scenario.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equivalence::{
    check_unitarity, energy_observable, expectation_invariance, intertwiner_residual, Intertwiner, RepresentationPair,
};
use crate::error::{Error, Result};
use crate::geometry::{
    active_transform, curvature, max_curvature, passive_transform, GaugeField, GaugeTransformation, ParameterPoint,
};
use crate::integrator::{evolve_states, Integrator, TimeGrid};
use crate::linalg::{
    hermitian_sqrt, hermiticity_defect, inner_product, matrix_exp, random, spin_matrices, MetricOperator, Operator,
    StateVector, I,
};
use crate::metric::{
    dress, dressed_hermitize, evolve_metric, hermitize, invariance_check, metric_residual, pseudo_hermiticity_defect,
    MetricTrajectory, UnitaryPath,
};
use crate::transport::{
    connection_hamiltonian, evolve_covariant, holonomy, parallel_transport, CovariantSystem, ParameterCurve,
    SectionHamiltonian,
};

use super::build::{CurveSetup, MetricSetup, Scenario, Setup};
use super::config::{CurveSpec, GaugeFieldSpec, SectionSpec};

/// Default pass thresholds, before `--tol-scale`.
pub const THRESHOLDS: &[(&str, f64)] = &[
    ("curvature_antisymmetry", 1e-10),
    ("curvature_hermiticity", 1e-9),
    ("gauge_covariance", 1e-6),
    ("flatness", 1e-6),
    ("norm_drift", 1e-9),
    ("inner_product_preservation", 1e-9),
    ("passive_gauge_consistency", 1e-7),
    ("reparametrization_invariance", 1e-8),
    ("holonomy_unitarity", 1e-8),
    ("energy_expectation_real", 1e-10),
    ("rotating_frame_oracle", 1e-7),
    ("eta_positivity", 1e-12),
    ("metric_residual", 1e-6),
    ("invariance", 1e-7),
    ("hermitization", 1e-6),
    ("pseudo_hermiticity", 1e-6),
    ("intertwiner_residual", 1e-8),
    ("intertwiner_unitarity", 1e-10),
    ("energy_observable_covariance", 1e-8),
    ("expectation_invariance", 1e-9),
    ("rho_unitarity", 1e-10),
    ("dressing_hermiticity", 1e-6),
];

/// Checks that pass when the measured value exceeds the threshold.
const LOWER_BOUNDS: &[&str] = &["eta_positivity"];

/// Curvature finite-difference step for geometry checks.
const CHECK_FD_STEP: f64 = 1e-4;
const GEOMETRY_SAMPLES: usize = 5;
const TIME_SAMPLES: usize = 41;
const UNITARITY_SAMPLES: usize = 6;
/// Scale of the random gauge generators.
const GAUGE_SCALE: f64 = 0.5;

pub fn threshold(name: &str) -> Option<f64> {
    THRESHOLDS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Pass rule for a measured value; NaN never passes.
pub fn passes(name: &str, measured: f64, threshold: f64) -> bool {
    if LOWER_BOUNDS.contains(&name) {
        measured > threshold
    } else {
        measured <= threshold
    }
}

/// Evenly spaced indices into `0..len`, endpoints included.
fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    if len <= count {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..count).map(|i| i * (len - 1) / (count - 1)).collect();
    out.dedup();
    out
}

/// Salted deterministic generator; each check draws from its own stream.
fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
}

/// `H(t) = H_A(t) + H_E(t)` owning its parts.
fn total_hamiltonian(
    field: GaugeField,
    section: SectionHamiltonian,
    curve: ParameterCurve,
    hbar: f64,
) -> impl Fn(f64) -> Result<Operator> + Send + Sync + 'static {
    move |t| {
        let h_a = connection_hamiltonian(&field, &curve, t, hbar)?;
        Ok(&h_a + &section.value(&curve.position(t)?)?)
    }
}

pub(super) struct CurveRun {
    pub states: Vec<StateVector>,
    pub norm_drift: f64,
}

pub(super) struct MetricRun {
    pub states: Vec<StateVector>,
    pub trajectory: MetricTrajectory,
}

pub(super) enum Trajectory {
    Curve(CurveRun),
    Metric(MetricRun),
}

impl Trajectory {
    pub fn states(&self) -> &[StateVector] {
        match self {
            Trajectory::Curve(c) => &c.states,
            Trajectory::Metric(m) => &m.states,
        }
    }
}

/// Main evolution of a scenario, with the corrupt-metric fixture applied.
pub(super) fn evolve(scenario: &Scenario) -> Result<Trajectory> {
    let integrator = scenario.config.integrator;
    match &scenario.setup {
        Setup::Curve(c) => {
            let result = match scenario.config.kind {
                super::config::ScenarioKind::Transport => {
                    parallel_transport(&c.field, &c.curve, &scenario.psi0, &scenario.grid, integrator)?
                }
                _ => evolve_covariant(&system(scenario, c, &c.curve), &scenario.psi0, &scenario.grid, integrator)?,
            };
            let n0 = scenario.psi0.norm();
            Ok(Trajectory::Curve(CurveRun {
                norm_drift: result.report.norm_drift / n0,
                states: result.states,
            }))
        }
        Setup::Metric(m) => {
            let h = |t: f64| m.generator.value(t);
            let states = evolve_states(&h, &scenario.psi0, &scenario.grid, scenario.hbar(), integrator)?;
            let mut trajectory = evolve_metric(&m.generator, &m.eta0, &scenario.grid, scenario.hbar(), integrator)?;
            if let Some(corrupt) = scenario.config.fixtures.as_ref().and_then(|f| f.corrupt_metric) {
                trajectory = trajectory.scaled_at(corrupt.index, corrupt.factor)?;
            }
            Ok(Trajectory::Metric(MetricRun { states, trajectory }))
        }
    }
}

fn system<'a>(scenario: &Scenario, c: &'a CurveSetup, curve: &'a ParameterCurve) -> CovariantSystem<'a> {
    CovariantSystem {
        field: &c.field,
        section: &c.section,
        frame_map: None,
        curve,
        hbar: scenario.hbar(),
    }
}

/// Evaluates named checks against one scenario and its main trajectory.
pub(super) struct Evaluator<'a> {
    pub scenario: &'a Scenario,
    pub trajectory: &'a Trajectory,
}

impl Evaluator<'_> {
    fn seed(&self) -> u64 {
        self.scenario.config.seed
    }

    fn integrator(&self) -> Integrator {
        self.scenario.config.integrator
    }

    fn grid(&self) -> &TimeGrid {
        &self.scenario.grid
    }

    pub fn measure(&self, name: &str) -> Result<f64> {
        match (&self.scenario.setup, self.trajectory) {
            (Setup::Curve(c), Trajectory::Curve(run)) => self.measure_curve(name, c, run),
            (Setup::Metric(m), Trajectory::Metric(run)) => self.measure_metric(name, m, run),
            _ => unreachable!("trajectory kind follows the scenario kind"),
        }
    }

    fn gauge_change(&self, salt: u64) -> Result<GaugeTransformation> {
        let mut rng = rng(self.seed(), salt);
        let (n, d) = (self.scenario.dim(), self.field_dim());
        let generators = (0..d)
            .map(|_| random::hermitian(n, &mut rng).scale_real(GAUGE_SCALE))
            .collect();
        GaugeTransformation::from_generators(generators)
    }

    fn field_dim(&self) -> usize {
        self.scenario.config.parameter_dimension.unwrap_or(0)
    }

    fn sample_points(&self, c: &CurveSetup) -> Result<Vec<ParameterPoint>> {
        sample_indices(self.grid().len(), GEOMETRY_SAMPLES)
            .into_iter()
            .map(|k| c.curve.position(self.grid().time(k)))
            .collect()
    }

    fn sample_times(&self) -> Vec<(usize, f64)> {
        sample_indices(self.grid().len(), TIME_SAMPLES)
            .into_iter()
            .map(|k| (k, self.grid().time(k)))
            .collect()
    }

    fn upper_pairs(&self) -> Vec<(usize, usize)> {
        let d = self.field_dim();
        (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect()
    }

    fn measure_curve(&self, name: &str, c: &CurveSetup, run: &CurveRun) -> Result<f64> {
        let hbar = self.scenario.hbar();
        let mut worst = 0.0_f64;
        match name {
            "curvature_antisymmetry" => {
                for p in self.sample_points(c)? {
                    for (a, b) in self.upper_pairs() {
                        let fab = curvature(&c.field, a, b, &p, CHECK_FD_STEP)?;
                        let fba = curvature(&c.field, b, a, &p, CHECK_FD_STEP)?;
                        worst = worst.max((&fab + &fba).max_abs());
                    }
                }
            }
            "curvature_hermiticity" => {
                for p in self.sample_points(c)? {
                    for (a, b) in self.upper_pairs() {
                        worst = worst.max(hermiticity_defect(&curvature(&c.field, a, b, &p, CHECK_FD_STEP)?));
                    }
                }
            }
            "gauge_covariance" => {
                let g = self.gauge_change(1)?;
                let transformed = passive_transform(&c.field, &g)?;
                for p in self.sample_points(c)? {
                    let gv = g.value(&p)?;
                    let g_inv = gv.adjoint();
                    for (a, b) in self.upper_pairs() {
                        let f = curvature(&c.field, a, b, &p, CHECK_FD_STEP)?;
                        let expected = &(&g_inv * &f) * &gv;
                        worst = worst.max(curvature(&transformed, a, b, &p, CHECK_FD_STEP)?.max_diff(&expected));
                    }
                }
            }
            "flatness" => worst = max_curvature(&c.field, &self.sample_points(c)?, CHECK_FD_STEP)?,
            "norm_drift" => worst = run.norm_drift,
            "inner_product_preservation" => {
                let mut rng = rng(self.seed(), 2);
                let h = total_hamiltonian(c.field.clone(), c.section.clone(), c.curve.clone(), hbar);
                let x0 = random::state(self.scenario.dim(), &mut rng).normalized()?;
                let y0 = random::state(self.scenario.dim(), &mut rng).normalized()?;
                let xs = evolve_states(&h, &x0, self.grid(), hbar, self.integrator())?;
                let ys = evolve_states(&h, &y0, self.grid(), hbar, self.integrator())?;
                let initial = inner_product(&x0, &y0)?;
                for (x, y) in xs.iter().zip(&ys) {
                    worst = worst.max((inner_product(x, y)? - initial).norm());
                }
            }
            "passive_gauge_consistency" => {
                // transport only, fourth order so the comparison is not
                // dominated by the time step
                let g = self.gauge_change(3)?;
                let transformed = passive_transform(&c.field, &g)?;
                let grid = self.grid();
                let psi = parallel_transport(&c.field, &c.curve, &self.scenario.psi0, grid, Integrator::Magnus4)?;
                let g0_inv = g.value(&c.curve.position(grid.start())?)?.adjoint();
                let start = g0_inv.apply(&self.scenario.psi0)?;
                let psi_t = parallel_transport(&transformed, &c.curve, &start, grid, Integrator::Magnus4)?;
                for ((t, a), b) in psi.times.iter().zip(&psi.states).zip(&psi_t.states) {
                    let expected = g.value(&c.curve.position(*t)?)?.adjoint().apply(a)?;
                    worst = worst.max(b.max_diff(&expected));
                }
            }
            "reparametrization_invariance" => {
                let (new_curve, new_grid) = c
                    .reparametrized
                    .as_ref()
                    .ok_or_else(|| Error::Usage("no reparametrization configured".into()))?;
                let original = run.states.last().expect("non-empty trajectory");
                let other = evolve_covariant(
                    &system(self.scenario, c, new_curve),
                    &self.scenario.psi0,
                    new_grid,
                    self.integrator(),
                )?;
                worst = other.final_state().max_diff(original);
            }
            "holonomy_unitarity" => {
                let grid = TimeGrid::new(c.curve.t_start(), c.curve.t_end(), self.grid().steps())?;
                worst = holonomy(&c.field, &c.curve, &grid, self.integrator())?.unitarity_defect();
            }
            "energy_expectation_real" => {
                let sys = system(self.scenario, c, &c.curve);
                for (k, psi) in run.states.iter().enumerate() {
                    let h_e = sys.section_term(self.grid().time(k))?;
                    worst = worst.max(inner_product(psi, &h_e.apply(psi)?)?.im.abs());
                }
            }
            "rotating_frame_oracle" => {
                let expected = self.rotating_frame_endpoint()?;
                worst = run.states.last().expect("non-empty trajectory").max_diff(&expected);
            }
            "intertwiner_residual" | "intertwiner_unitarity" | "energy_observable_covariance" => {
                return self.curve_equivalence(name, c);
            }
            "expectation_invariance" => {
                let g = self.gauge_change(4)?;
                let u = Intertwiner::along_curve(&g, &c.curve);
                let o = random::hermitian(self.scenario.dim(), &mut rng(self.seed(), 5));
                let eta = MetricOperator::identity(self.scenario.dim());
                for (k, t) in self.sample_times() {
                    worst = worst.max(expectation_invariance(&u, &o, &run.states[k], &eta, &eta, t)?);
                }
            }
            other => return Err(not_applicable(other)),
        }
        Ok(worst)
    }

    /// `Ψ(t) = e^{−iωtS_z} e^{−i(t−t₀)K} e^{iωt₀S_z} Ψ₀` with
    /// `K = H(0)/ħ − ωS_z`: the Hamiltonian is a z-rotation of its value at
    /// `φ = 0`, so the rotating frame removes the time dependence.
    fn rotating_frame_endpoint(&self) -> Result<StateVector> {
        let config = &self.scenario.config;
        let (Some(CurveSpec::CircleOnSphere { theta, omega }), Some(GaugeFieldSpec::SphereSpin { twice_spin })) =
            (&config.curve, &config.gauge_field)
        else {
            return Err(not_applicable("rotating_frame_oracle"));
        };
        let Some(SectionSpec::SpinInField { larmor, .. }) = &config.section_hamiltonian else {
            return Err(not_applicable("rotating_frame_oracle"));
        };
        let [sx, _, sz] = spin_matrices(*twice_spin)?;
        let field_dir = &sx.scale_real(theta.sin()) + &sz.scale_real(theta.cos());
        let k = &(&sz.scale_real(omega * (1.0 - theta.cos())) + &field_dir.scale_real(*larmor))
            - &sz.scale_real(*omega);
        let (t0, t1) = (self.grid().start(), self.grid().end());
        let u = &(&matrix_exp(&sz.scale(-I * omega * t1)) * &matrix_exp(&k.scale(-I * (t1 - t0))))
            * &matrix_exp(&sz.scale(I * omega * t0));
        u.apply(&self.scenario.psi0)
    }

    /// Pair 1 is the scenario; pair 2 its image under `𝒰(t) = 𝒢[R(t)]`,
    /// with `H₂ = ħṘ·Ǎ + 𝒰 H_E 𝒰⁻¹` and `Ǎ` the actively transformed field.
    fn curve_equivalence(&self, name: &str, c: &CurveSetup) -> Result<f64> {
        let hbar = self.scenario.hbar();
        let n = self.scenario.dim();
        let g = self.gauge_change(4)?;
        let u = Intertwiner::along_curve(&g, &c.curve);
        let active = active_transform(&c.field, &g)?;
        let h1 = Arc::new(total_hamiltonian(c.field.clone(), c.section.clone(), c.curve.clone(), hbar));
        let h2 = {
            let (active, curve, section, g) = (active.clone(), c.curve.clone(), c.section.clone(), g.clone());
            Arc::new(move |t: f64| -> Result<Operator> {
                let point = curve.position(t)?;
                let gv = g.value(&point)?;
                let h_e = &(&gv * &section.value(&point)?) * &gv.adjoint();
                Ok(&connection_hamiltonian(&active, &curve, t, hbar)? + &h_e)
            })
        };
        let eta = MetricOperator::identity(n);
        let mut worst = 0.0_f64;
        match name {
            "intertwiner_residual" => {
                let (a, b) = (Arc::clone(&h1), Arc::clone(&h2));
                let pair1 = RepresentationPair::new(eta.clone(), move |t| a(t));
                let pair2 = RepresentationPair::new(eta, move |t| b(t));
                for (_, t) in self.sample_times() {
                    worst = worst.max(intertwiner_residual(&u, &pair1, &pair2, t, hbar)?);
                }
            }
            "intertwiner_unitarity" => {
                for (k, t) in self.sample_times() {
                    let seed = self.seed().wrapping_add(k as u64);
                    worst = worst.max(check_unitarity(&u, &eta, &eta, t, UNITARITY_SAMPLES, seed)?);
                }
            }
            "energy_observable_covariance" => {
                for (_, t) in self.sample_times() {
                    let e1 = energy_observable(|s| h1(s), &c.field, &c.curve, t, hbar)?;
                    let e2 = energy_observable(|s| h2(s), &active, &c.curve, t, hbar)?;
                    let uv = u.value(t)?;
                    worst = worst.max(e2.max_diff(&(&(&uv * &e1) * &u.inverse(t)?)));
                }
            }
            other => return Err(not_applicable(other)),
        }
        Ok(worst)
    }

    fn interior(&self) -> std::ops::Range<usize> {
        1..self.grid().steps()
    }

    fn measure_metric(&self, name: &str, m: &MetricSetup, run: &MetricRun) -> Result<f64> {
        let hbar = self.scenario.hbar();
        let traj = &run.trajectory;
        let n = self.scenario.dim();
        let mut worst = 0.0_f64;
        match name {
            "eta_positivity" => {
                return Ok(traj.eta().iter().map(|e| e.eigen_range().0).fold(f64::INFINITY, f64::min));
            }
            "metric_residual" => {
                for k in self.interior() {
                    worst = worst.max(metric_residual(&m.generator, traj, self.grid().time(k), hbar)?);
                }
            }
            "invariance" => {
                let other = random::state(n, &mut rng(self.seed(), 6)).normalized()?;
                worst = invariance_check(&m.generator, traj, &self.scenario.psi0, &other, hbar, self.integrator())?;
            }
            "hermitization" => {
                for k in self.interior() {
                    worst = worst.max(hermiticity_defect(&hermitize(&m.generator, traj, self.grid().time(k), hbar)?));
                }
            }
            "pseudo_hermiticity" => {
                for k in self.interior() {
                    worst = worst.max(pseudo_hermiticity_defect(&m.generator, traj, self.grid().time(k), hbar)?);
                }
            }
            "rho_unitarity" => {
                let identity = MetricOperator::identity(n);
                for (k, t) in self.sample_times() {
                    let rho = Intertwiner::constant(hermitian_sqrt(&traj.eta()[k])?);
                    let seed = self.seed().wrapping_add(k as u64);
                    worst = worst.max(check_unitarity(&rho, &traj.eta()[k], &identity, t, UNITARITY_SAMPLES, seed)?);
                }
            }
            "dressing_hermiticity" => {
                let k_gen = random::hermitian(n, &mut rng(self.seed(), 7));
                let u: UnitaryPath = Arc::new(move |t| Ok(matrix_exp(&k_gen.scale(-I * t))));
                let dressing = dress(traj, Some(&u))?;
                for k in self.interior() {
                    let h = dressed_hermitize(&m.generator, &dressing, self.grid().time(k), hbar)?;
                    worst = worst.max(hermiticity_defect(&h));
                }
            }
            "expectation_invariance" => {
                let o = random::complex_matrix(n, &mut rng(self.seed(), 8));
                let identity = MetricOperator::identity(n);
                for (k, t) in self.sample_times() {
                    let rho = Intertwiner::constant(hermitian_sqrt(&traj.eta()[k])?);
                    worst = worst.max(expectation_invariance(&rho, &o, &run.states[k], &traj.eta()[k], &identity, t)?);
                }
            }
            other => return Err(not_applicable(other)),
        }
        Ok(worst)
    }
}

fn not_applicable(name: &str) -> Error {
    Error::Usage(format!("check `{name}` does not apply to this scenario"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_has_a_threshold() {
        for (name, _) in super::super::config::CHECKS {
            assert!(threshold(name).is_some(), "{name}");
        }
    }

    #[test]
    fn pass_rules() {
        assert!(passes("norm_drift", 1e-10, 1e-9));
        assert!(!passes("norm_drift", f64::NAN, 1e-9));
        assert!(passes("eta_positivity", 0.5, 1e-12));
        assert!(!passes("eta_positivity", 0.0, 1e-12));
    }

    #[test]
    fn samples_include_endpoints() {
        assert_eq!(sample_indices(3, 5), vec![0, 1, 2]);
        let s = sample_indices(2001, 5);
        assert_eq!(s, vec![0, 500, 1000, 1500, 2000]);
    }
}
