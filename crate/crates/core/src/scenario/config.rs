//! JSON scenario configuration: schema, parsing and validation.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major nested
//! arrays of them. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Integrator;
use crate::linalg::{is_hermitian, MetricOperator, Operator, StateVector, Tolerances, C64};

pub const SCHEMA_VERSION: u32 = 1;

pub type ComplexSpec = [f64; 2];
pub type MatrixSpec = Vec<Vec<ComplexSpec>>;

const REQUIRED_FIELDS: [&str; 6] = ["schema_version", "name", "kind", "dimension", "grid", "initial_state"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `iħ dΨ/dt = (H_A + H_E) Ψ` along a curve.
    Covariant,
    /// Parallel transport only.
    Transport,
    /// Non-Hermitian generator with an evolving metric.
    Metric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// From `from` at the grid start to `to` at the grid end.
    Line { from: Vec<f64>, to: Vec<f64> },
    /// `R = (φ, θ)` with `φ(t) = ωt`.
    CircleOnSphere { theta: f64, omega: f64 },
    /// Closed square in the `(a, b)` plane, traversed once over the grid.
    SquareLoop { origin: Vec<f64>, a: usize, b: usize, side: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeFieldSpec {
    Zero,
    Constant { matrices: Vec<MatrixSpec> },
    /// `A_a = base[a] + Σ_b R_b slopes[a][b]`.
    Linear { base: Vec<MatrixSpec>, slopes: Vec<Vec<MatrixSpec>> },
    /// `A_a = −i𝒢⁻¹∂_a𝒢` with `𝒢 = exp(−i Σ_a R_a K_a)`.
    PureGauge { generators: Vec<MatrixSpec> },
    SphereSpin { twice_spin: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SectionSpec {
    Zero,
    Constant { matrix: MatrixSpec },
    /// `ħ ω_L B̂(R)·S` on `R = (φ, θ)`.
    SpinInField { twice_spin: usize, larmor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Constant { matrix: MatrixSpec },
    PtTwolevel { r: f64, theta: f64, s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReparametrizationSpec {
    /// `f(t) = scale·t + offset` on `domain`.
    Affine { scale: f64, offset: f64, domain: [f64; 2] },
    /// `f(t) = t^exponent` on `domain`.
    Power { exponent: f64, domain: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub eta0: MatrixSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptMetric {
    pub index: usize,
    pub factor: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixtures {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupt_metric: Option<CorruptMetric>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub kind: ScenarioKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter_dimension: Option<usize>,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge_field: Option<GaugeFieldSpec>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_non_hermitian: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_hamiltonian: Option<SectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    pub initial_state: Vec<ComplexSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reparametrization: Option<ReparametrizationSpec>,
    /// Checks performed by `run`; defaults depend on the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<Fixtures>,
}

fn default_hbar() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    42
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let object = value
        .as_object()
        .ok_or_else(|| Error::validation("$", "configuration must be a JSON object"))?;
    let missing: Vec<&str> = REQUIRED_FIELDS.iter().copied().filter(|k| !object.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(Error::validation(missing.join(", "), "missing required field(s)"));
    }
    let config: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::validation(if path.is_empty() { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn to_json(config: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

pub(crate) fn complex(c: &ComplexSpec) -> C64 {
    C64::new(c[0], c[1])
}

pub(crate) fn complex_spec(c: C64) -> ComplexSpec {
    [c.re, c.im]
}

pub fn matrix_spec(op: &Operator) -> MatrixSpec {
    op.rows()
        .into_iter()
        .map(|row| row.into_iter().map(complex_spec).collect())
        .collect()
}

/// Matrix of the expected dimension, or a validation error naming `field`.
pub(crate) fn operator(m: &MatrixSpec, n: usize, field: &str) -> Result<Operator> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(Error::validation(field, format!("expected a {n}x{n} matrix")));
    }
    let rows: Vec<Vec<C64>> = m.iter().map(|row| row.iter().map(complex).collect()).collect();
    Operator::from_rows(&rows).map_err(|e| Error::validation(field, e.to_string()))
}

fn hermitian_operator(m: &MatrixSpec, n: usize, field: &str, tol: &Tolerances) -> Result<Operator> {
    let op = operator(m, n, field)?;
    if !is_hermitian(&op, tol.herm) {
        return Err(Error::validation(field, "matrix must be Hermitian"));
    }
    Ok(op)
}

fn finite(x: f64, field: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

/// Every check name, with the suite it belongs to.
pub const CHECKS: &[(&str, &str)] = &[
    ("curvature_antisymmetry", "geometry"),
    ("curvature_hermiticity", "geometry"),
    ("gauge_covariance", "geometry"),
    ("flatness", "geometry"),
    ("norm_drift", "transport"),
    ("inner_product_preservation", "transport"),
    ("passive_gauge_consistency", "transport"),
    ("reparametrization_invariance", "transport"),
    ("holonomy_unitarity", "transport"),
    ("energy_expectation_real", "transport"),
    ("rotating_frame_oracle", "transport"),
    ("eta_positivity", "metric"),
    ("metric_residual", "metric"),
    ("invariance", "metric"),
    ("hermitization", "metric"),
    ("pseudo_hermiticity", "metric"),
    ("intertwiner_residual", "equivalence"),
    ("intertwiner_unitarity", "equivalence"),
    ("energy_observable_covariance", "equivalence"),
    ("expectation_invariance", "equivalence"),
    ("rho_unitarity", "equivalence"),
    ("dressing_hermiticity", "equivalence"),
];

impl ScenarioConfig {
    pub fn grid_steps(&self) -> usize {
        self.grid.steps
    }

    pub fn is_curve_kind(&self) -> bool {
        matches!(self.kind, ScenarioKind::Covariant | ScenarioKind::Transport)
    }

    /// Full semantic validation; run by [`parse_config`].
    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(Error::validation("name", "use letters, digits, '-', '_' or '.'"));
        }
        let n = self.dimension;
        if n == 0 {
            return Err(Error::validation("dimension", "must be at least 1"));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::validation("hbar", "must be positive and finite"));
        }
        self.validate_grid()?;
        if self.initial_state.len() != n {
            return Err(Error::validation(
                "initial_state",
                format!("expected {n} components, got {}", self.initial_state.len()),
            ));
        }
        let psi = StateVector::new(self.initial_state.iter().map(complex).collect())
            .map_err(|e| Error::validation("initial_state", e.to_string()))?;
        if psi.norm() == 0.0 {
            return Err(Error::validation("initial_state", "must be nonzero"));
        }
        match self.kind {
            ScenarioKind::Covariant | ScenarioKind::Transport => self.validate_curve_kind(tol)?,
            ScenarioKind::Metric => self.validate_metric_kind(tol)?,
        }
        self.validate_checks()
    }

    fn validate_grid(&self) -> Result<()> {
        let g = &self.grid;
        finite(g.t_start, "grid.t_start")?;
        finite(g.t_end, "grid.t_end")?;
        if g.t_start == g.t_end {
            return Err(Error::validation("grid.t_end", "must differ from grid.t_start"));
        }
        if g.steps < 2 {
            return Err(Error::validation("grid.steps", "must be at least 2"));
        }
        Ok(())
    }

    fn validate_curve_kind(&self, tol: &Tolerances) -> Result<()> {
        let n = self.dimension;
        let d = self
            .parameter_dimension
            .ok_or_else(|| Error::validation("parameter_dimension", "required for curve scenarios"))?;
        if d == 0 {
            return Err(Error::validation("parameter_dimension", "must be at least 1"));
        }
        for (present, field) in [
            (self.generator.is_some(), "generator"),
            (self.metric.is_some(), "metric"),
            (self.fixtures.as_ref().and_then(|f| f.corrupt_metric).is_some(), "fixtures.corrupt_metric"),
        ] {
            if present {
                return Err(Error::validation(field, "only allowed for metric scenarios"));
            }
        }
        let curve = self
            .curve
            .as_ref()
            .ok_or_else(|| Error::validation("curve", "required for curve scenarios"))?;
        match curve {
            CurveSpec::Line { from, to } => {
                if from.len() != d || to.len() != d {
                    return Err(Error::validation("curve", format!("line endpoints need {d} coordinates")));
                }
                for (i, x) in from.iter().chain(to).enumerate() {
                    finite(*x, &format!("curve.from/to[{i}]"))?;
                }
            }
            CurveSpec::CircleOnSphere { theta, omega } => {
                if d != 2 {
                    return Err(Error::validation("curve", "circle_on_sphere needs parameter_dimension 2"));
                }
                finite(*omega, "curve.omega")?;
                if !(*theta > 0.0 && *theta < std::f64::consts::PI) {
                    return Err(Error::validation("curve.theta", "polar angle must lie in (0, π)"));
                }
            }
            CurveSpec::SquareLoop { origin, a, b, side } => {
                if origin.len() != d {
                    return Err(Error::validation("curve.origin", format!("expected {d} coordinates")));
                }
                if *a >= d || *b >= d || a == b {
                    return Err(Error::validation("curve", "square loop needs distinct coordinate indices below d"));
                }
                finite(*side, "curve.side")?;
                if *side == 0.0 {
                    return Err(Error::validation("curve.side", "must be nonzero"));
                }
            }
        }
        let field = self
            .gauge_field
            .as_ref()
            .ok_or_else(|| Error::validation("gauge_field", "required for curve scenarios"))?;
        let hermitian_required = !self.allow_non_hermitian;
        let check_list = |ms: &Vec<MatrixSpec>, name: &str| -> Result<()> {
            if ms.len() != d {
                return Err(Error::validation(
                    format!("gauge_field.{name}"),
                    format!("expected {d} matrices, got {}", ms.len()),
                ));
            }
            for (i, m) in ms.iter().enumerate() {
                let path = format!("gauge_field.{name}[{i}]");
                if hermitian_required || name == "generators" {
                    hermitian_operator(m, n, &path, tol)?;
                } else {
                    operator(m, n, &path)?;
                }
            }
            Ok(())
        };
        match field {
            GaugeFieldSpec::Zero => {}
            GaugeFieldSpec::Constant { matrices } => check_list(matrices, "matrices")?,
            GaugeFieldSpec::Linear { base, slopes } => {
                check_list(base, "base")?;
                if slopes.len() != d {
                    return Err(Error::validation("gauge_field.slopes", format!("expected {d} rows")));
                }
                for (a, row) in slopes.iter().enumerate() {
                    check_list(row, &format!("slopes[{a}]"))?;
                }
            }
            GaugeFieldSpec::PureGauge { generators } => check_list(generators, "generators")?,
            GaugeFieldSpec::SphereSpin { twice_spin } => {
                if d != 2 || *twice_spin + 1 != n {
                    return Err(Error::validation(
                        "gauge_field.twice_spin",
                        format!("sphere_spin needs d=2 and dimension = twice_spin + 1 (got d={d}, N={n})"),
                    ));
                }
            }
        }
        match (&self.section_hamiltonian, self.kind) {
            (Some(_), ScenarioKind::Transport) => {
                return Err(Error::validation("section_hamiltonian", "not used by transport scenarios"))
            }
            (None, ScenarioKind::Covariant) => {
                return Err(Error::validation("section_hamiltonian", "required for covariant scenarios"))
            }
            (Some(SectionSpec::Constant { matrix }), _) => {
                hermitian_operator(matrix, n, "section_hamiltonian.matrix", tol)?;
            }
            (Some(SectionSpec::SpinInField { twice_spin, larmor }), _) => {
                finite(*larmor, "section_hamiltonian.larmor")?;
                if d != 2 || *twice_spin + 1 != n {
                    return Err(Error::validation(
                        "section_hamiltonian.twice_spin",
                        "spin_in_field needs d=2 and dimension = twice_spin + 1",
                    ));
                }
            }
            _ => {}
        }
        if let Some(reparam) = &self.reparametrization {
            let (domain, params) = match reparam {
                ReparametrizationSpec::Affine { scale, offset, domain } => (domain, [*scale, *offset]),
                ReparametrizationSpec::Power { exponent, domain } => (domain, [*exponent, 1.0]),
            };
            for x in domain.iter().chain(&params) {
                finite(*x, "reparametrization")?;
            }
            if domain[0] >= domain[1] {
                return Err(Error::validation("reparametrization.domain", "must be an increasing interval"));
            }
            if let ReparametrizationSpec::Power { .. } = reparam {
                if domain[0] <= 0.0 {
                    return Err(Error::validation("reparametrization.domain", "power maps need a positive domain"));
                }
            }
            let f = |t: f64| match reparam {
                ReparametrizationSpec::Affine { scale, offset, .. } => scale * t + offset,
                ReparametrizationSpec::Power { exponent, .. } => t.powf(*exponent),
            };
            let (fa, fb) = (f(domain[0]), f(domain[1]));
            let (t0, t1) = (self.grid.t_start, self.grid.t_end);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + y.abs());
            if !((close(fa, t0) && close(fb, t1)) || (close(fa, t1) && close(fb, t0))) {
                return Err(Error::validation(
                    "reparametrization.domain",
                    format!("f maps the domain onto [{fa}, {fb}], which must match the grid [{t0}, {t1}]"),
                ));
            }
        }
        Ok(())
    }

    fn validate_metric_kind(&self, tol: &Tolerances) -> Result<()> {
        let n = self.dimension;
        for (present, field) in [
            (self.curve.is_some(), "curve"),
            (self.gauge_field.is_some(), "gauge_field"),
            (self.section_hamiltonian.is_some(), "section_hamiltonian"),
            (self.reparametrization.is_some(), "reparametrization"),
        ] {
            if present {
                return Err(Error::validation(field, "not used by metric scenarios"));
            }
        }
        match self
            .generator
            .as_ref()
            .ok_or_else(|| Error::validation("generator", "required for metric scenarios"))?
        {
            GeneratorSpec::Constant { matrix } => {
                operator(matrix, n, "generator.matrix")?;
            }
            GeneratorSpec::PtTwolevel { r, theta, s } => {
                if n != 2 {
                    return Err(Error::validation("generator", "pt_twolevel needs dimension 2"));
                }
                for (x, f) in [(r, "generator.r"), (theta, "generator.theta"), (s, "generator.s")] {
                    finite(*x, f)?;
                }
            }
        }
        if let Some(metric) = &self.metric {
            let eta = operator(&metric.eta0, n, "metric.eta0")?;
            MetricOperator::with_tolerances(eta, tol).map_err(|e| Error::validation("metric.eta0", e.to_string()))?;
        }
        if let Some(corrupt) = self.fixtures.as_ref().and_then(|f| f.corrupt_metric) {
            if corrupt.index == 0 || corrupt.index > self.grid.steps {
                return Err(Error::validation(
                    "fixtures.corrupt_metric.index",
                    format!("must lie in 1..={}", self.grid.steps),
                ));
            }
            if !(corrupt.factor.is_finite() && corrupt.factor > 0.0) {
                return Err(Error::validation("fixtures.corrupt_metric.factor", "must be positive"));
            }
        }
        Ok(())
    }

    fn validate_checks(&self) -> Result<()> {
        let Some(checks) = &self.checks else {
            return Ok(());
        };
        let applicable = self.applicable_checks();
        for (i, name) in checks.iter().enumerate() {
            if !CHECKS.iter().any(|(c, _)| c == name) {
                return Err(Error::validation(format!("checks[{i}]"), format!("unknown check `{name}`")));
            }
            if !applicable.contains(&name.as_str()) {
                return Err(Error::validation(
                    format!("checks[{i}]"),
                    format!("check `{name}` does not apply to this scenario"),
                ));
            }
            if checks[..i].contains(name) {
                return Err(Error::validation(format!("checks[{i}]"), format!("duplicate check `{name}`")));
            }
        }
        Ok(())
    }

    /// Checks that make sense for this scenario, in canonical order.
    pub fn applicable_checks(&self) -> Vec<&'static str> {
        CHECKS
            .iter()
            .map(|(name, _)| *name)
            .filter(|name| self.applies(name))
            .collect()
    }

    fn applies(&self, check: &str) -> bool {
        let curve_kind = self.is_curve_kind();
        match check {
            "curvature_antisymmetry" | "curvature_hermiticity" | "gauge_covariance" | "norm_drift"
            | "inner_product_preservation" | "passive_gauge_consistency" | "intertwiner_residual"
            | "intertwiner_unitarity" | "energy_observable_covariance" => curve_kind,
            "expectation_invariance" => true,
            "flatness" => matches!(
                self.gauge_field,
                Some(GaugeFieldSpec::Zero | GaugeFieldSpec::PureGauge { .. })
            ),
            "reparametrization_invariance" => curve_kind && self.reparametrization.is_some(),
            "holonomy_unitarity" => matches!(self.curve, Some(CurveSpec::SquareLoop { .. })),
            "energy_expectation_real" => self.kind == ScenarioKind::Covariant,
            "rotating_frame_oracle" => {
                self.kind == ScenarioKind::Covariant
                    && matches!(self.curve, Some(CurveSpec::CircleOnSphere { .. }))
                    && matches!(self.gauge_field, Some(GaugeFieldSpec::SphereSpin { .. }))
                    && matches!(self.section_hamiltonian, Some(SectionSpec::SpinInField { .. }))
            }
            "eta_positivity" | "metric_residual" | "invariance" | "hermitization" | "pseudo_hermiticity"
            | "rho_unitarity" | "dressing_hermiticity" => !curve_kind,
            _ => false,
        }
    }

    /// Checks performed by `run` when the config does not list any.
    pub fn default_checks(&self) -> Vec<&'static str> {
        let wanted: &[&str] = match self.kind {
            ScenarioKind::Transport => &["norm_drift", "inner_product_preservation", "reparametrization_invariance"],
            ScenarioKind::Covariant => &[
                "norm_drift",
                "reparametrization_invariance",
                "energy_expectation_real",
                "rotating_frame_oracle",
            ],
            ScenarioKind::Metric => &["eta_positivity", "metric_residual", "invariance"],
        };
        self.applicable_checks()
            .into_iter()
            .filter(|c| wanted.contains(c))
            .collect()
    }

    /// Checks of one suite that apply to this scenario.
    pub fn suite_checks(&self, suite: &str) -> Vec<&'static str> {
        CHECKS
            .iter()
            .filter(|(name, s)| *s == suite && self.applies(name))
            .map(|(name, _)| *name)
            .collect()
    }
}

/// Spin `twice_spin/2` in a field of Larmor frequency `larmor` rotating at
/// angular velocity `omega` about z at polar angle `theta`.
pub fn build_spin_scenario(twice_spin: usize, larmor: f64, omega: f64, theta: f64) -> Result<ScenarioConfig> {
    if twice_spin == 0 {
        return Err(Error::validation("twice_spin", "spin must be at least 1/2"));
    }
    let n = twice_spin + 1;
    let mut initial_state = vec![[0.0, 0.0]; n];
    initial_state[0] = [1.0, 0.0];
    let config = ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: format!("spin-{twice_spin}-half"),
        kind: ScenarioKind::Covariant,
        dimension: n,
        parameter_dimension: Some(2),
        hbar: 1.0,
        seed: default_seed(),
        curve: Some(CurveSpec::CircleOnSphere { theta, omega }),
        gauge_field: Some(GaugeFieldSpec::SphereSpin { twice_spin }),
        allow_non_hermitian: false,
        section_hamiltonian: Some(SectionSpec::SpinInField { twice_spin, larmor }),
        generator: None,
        metric: None,
        initial_state,
        grid: GridSpec {
            t_start: 0.0,
            t_end: 20.0,
            steps: 4000,
        },
        integrator: Integrator::Magnus4,
        reparametrization: None,
        checks: None,
        output: None,
        fixtures: None,
    };
    config.validate()?;
    Ok(config)
}
