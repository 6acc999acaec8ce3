//! Configuration-driven scenarios: build, evolve, check, write outputs.
//!
//! A scenario run writes `<name>.csv` (trajectory) and
//! `<name>.report.json` (check results) to the output directory.

mod build;
mod checks;
mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use build::{curve, gauge_field, section, CurveSetup, MetricSetup, Scenario, Setup};
pub use checks::{passes, threshold, THRESHOLDS};
pub use config::{
    build_spin_scenario, matrix_spec, parse_config, to_json, ComplexSpec, CorruptMetric, CurveSpec, Fixtures,
    GaugeFieldSpec, GeneratorSpec, GridSpec, MatrixSpec, MetricSpec, OutputSpec, ReparametrizationSpec,
    ScenarioConfig, ScenarioKind, SectionSpec, CHECKS, SCHEMA_VERSION,
};

use crate::error::{Error, Result};
use crate::linalg::metric_inner_product;
use checks::{Evaluator, Trajectory};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HB_OUT_DIR";

pub const SUITES: &[&str] = &["geometry", "transport", "metric", "equivalence", "all"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub name: String,
    pub order: u32,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub checks: Vec<CheckResult>,
    pub integrator: IntegratorStats,
    /// Wall time in milliseconds; absent unless timing was requested so that
    /// reports stay byte-identical across runs.
    pub wall_ms: Option<f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Multiplies every check threshold.
    pub tol_scale: f64,
    pub steps: Option<usize>,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: None,
            tol_scale: 1.0,
            steps: None,
            timing: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub trajectory_path: PathBuf,
    pub report_path: PathBuf,
}

fn effective_config(config: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioConfig> {
    if !(opts.tol_scale.is_finite() && opts.tol_scale > 0.0) {
        return Err(Error::Usage(format!("--tol-scale must be positive, got {}", opts.tol_scale)));
    }
    let mut config = config.clone();
    if let Some(steps) = opts.steps {
        config.grid.steps = steps;
    }
    config.validate()?;
    Ok(config)
}

fn evaluate(
    scenario: &Scenario,
    trajectory: &Trajectory,
    names: &[&str],
    tol_scale: f64,
) -> Result<Vec<CheckResult>> {
    let evaluator = Evaluator { scenario, trajectory };
    names
        .iter()
        .map(|name| {
            let threshold = threshold(name).ok_or_else(|| Error::Usage(format!("unknown check `{name}`")))? * tol_scale;
            let measured = evaluator.measure(name)?;
            Ok(CheckResult {
                name: name.to_string(),
                measured,
                threshold,
                pass: passes(name, measured, threshold),
            })
        })
        .collect()
}

fn report(scenario: &Scenario, checks: Vec<CheckResult>, started: Instant, timing: bool) -> RunReport {
    let integrator = scenario.config.integrator;
    RunReport {
        scenario: scenario.config.name.clone(),
        checks,
        integrator: IntegratorStats {
            name: integrator.id().to_string(),
            order: integrator.order(),
            steps: scenario.grid.steps(),
        },
        wall_ms: timing.then(|| started.elapsed().as_secs_f64() * 1e3),
    }
}

/// Evolves the scenario and evaluates its configured (or default) checks
/// without writing anything.
pub fn run_report(config: &ScenarioConfig, opts: &RunOptions) -> Result<(RunReport, String)> {
    let started = Instant::now();
    let config = effective_config(config, opts)?;
    let scenario = Scenario::build(&config)?;
    let trajectory = checks::evolve(&scenario)?;
    let names: Vec<&str> = match &config.checks {
        Some(list) => list.iter().map(String::as_str).collect(),
        None => config.default_checks(),
    };
    let results = evaluate(&scenario, &trajectory, &names, opts.tol_scale)?;
    let csv = trajectory_csv(&scenario, &trajectory)?;
    Ok((report(&scenario, results, started, opts.timing), csv))
}

/// Runs the scenario and writes the trajectory CSV and JSON report.
pub fn run(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput> {
    let (report, csv) = run_report(config, opts)?;
    let dir = output_dir(config, opts);
    std::fs::create_dir_all(&dir)?;
    let output = config.output.clone().unwrap_or_default();
    let trajectory_path = dir.join(output.trajectory.unwrap_or_else(|| format!("{}.csv", config.name)));
    let report_path = dir.join(output.report.unwrap_or_else(|| format!("{}.report.json", config.name)));
    write_file(&trajectory_path, &csv)?;
    write_file(&report_path, &(report.to_json() + "\n"))?;
    Ok(RunOutput {
        report,
        trajectory_path,
        report_path,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `--out`, then the config's `output.dir`, then `HB_OUT_DIR`, then `.`.
pub fn output_dir(config: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| config.output.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs one invariant suite. `all` runs every suite that applies.
pub fn check(config: &ScenarioConfig, suite: &str, opts: &RunOptions) -> Result<RunReport> {
    if !SUITES.contains(&suite) {
        return Err(Error::Usage(format!(
            "unknown suite `{suite}`; expected one of {}",
            SUITES.join(", ")
        )));
    }
    let started = Instant::now();
    let config = effective_config(config, opts)?;
    let names: Vec<&str> = if suite == "all" {
        config.applicable_checks()
    } else {
        let names = config.suite_checks(suite);
        if names.is_empty() {
            return Err(Error::Usage(format!(
                "suite `{suite}` does not apply to {:?} scenarios",
                config.kind
            )));
        }
        names
    };
    let scenario = Scenario::build(&config)?;
    let trajectory = checks::evolve(&scenario)?;
    let results = evaluate(&scenario, &trajectory, &names, opts.tol_scale)?;
    Ok(report(&scenario, results, started, opts.timing))
}

/// `t, re(c_1), im(c_1), …, norm`; metric runs use the η-norm and append
/// the extreme eigenvalues of η(t).
fn trajectory_csv(scenario: &Scenario, trajectory: &Trajectory) -> Result<String> {
    let n = scenario.dim();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",re(c_{i}),im(c_{i})");
    }
    out.push_str(",norm");
    let metric = match trajectory {
        Trajectory::Metric(m) => Some(&m.trajectory),
        Trajectory::Curve(_) => None,
    };
    if metric.is_some() {
        out.push_str(",eta_min_eig,eta_max_eig");
    }
    out.push('\n');
    for (k, psi) in trajectory.states().iter().enumerate() {
        let _ = write!(out, "{:?}", scenario.grid.time(k));
        for c in psi.components() {
            let _ = write!(out, ",{:?},{:?}", c.re, c.im);
        }
        match metric {
            None => {
                let _ = write!(out, ",{:?}", psi.norm());
            }
            Some(traj) => {
                let eta = &traj.eta()[k];
                let norm = metric_inner_product(eta, psi, psi)?.re.max(0.0).sqrt();
                let (lo, hi) = eta.eigen_range();
                let _ = write!(out, ",{norm:?},{lo:?},{hi:?}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}
