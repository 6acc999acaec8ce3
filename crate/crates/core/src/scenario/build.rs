//! Turns a validated configuration into library objects.

use crate::error::{Error, Result};
use crate::geometry::{pure_gauge, GaugeField, GaugeTransformation};
use crate::integrator::TimeGrid;
use crate::linalg::{MetricOperator, Operator, StateVector};
use crate::metric::NonHermitianGenerator;
use crate::transport::{reparametrize, ParameterCurve, Reparametrization, SectionHamiltonian};

use super::config::{
    complex, operator, CurveSpec, GaugeFieldSpec, GeneratorSpec, ReparametrizationSpec, ScenarioConfig, ScenarioKind,
    SectionSpec,
};

/// Curve scenario: field, curve and optional section term.
#[derive(Clone, Debug)]
pub struct CurveSetup {
    pub field: GaugeField,
    pub curve: ParameterCurve,
    /// Zero for transport scenarios.
    pub section: SectionHamiltonian,
    /// `R(f(s))` together with the grid in `s` that covers the same endpoints.
    pub reparametrized: Option<(ParameterCurve, TimeGrid)>,
}

#[derive(Clone, Debug)]
pub struct MetricSetup {
    pub generator: NonHermitianGenerator,
    pub eta0: MetricOperator,
}

#[derive(Clone, Debug)]
pub enum Setup {
    Curve(Box<CurveSetup>),
    Metric(MetricSetup),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: TimeGrid,
    pub psi0: StateVector,
    pub setup: Setup,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = TimeGrid::new(config.grid.t_start, config.grid.t_end, config.grid.steps)?;
        let psi0 = StateVector::new(config.initial_state.iter().map(complex).collect())?;
        let setup = match config.kind {
            ScenarioKind::Covariant | ScenarioKind::Transport => Setup::Curve(Box::new(curve_setup(config, &grid)?)),
            ScenarioKind::Metric => Setup::Metric(metric_setup(config)?),
        };
        Ok(Self {
            config: config.clone(),
            grid,
            psi0,
            setup,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.config.hbar
    }

    pub fn dim(&self) -> usize {
        self.config.dimension
    }

    /// Curve parts; fails for metric scenarios.
    pub fn curve_setup(&self) -> Result<&CurveSetup> {
        match &self.setup {
            Setup::Curve(c) => Ok(c),
            Setup::Metric(_) => Err(Error::Usage(format!("scenario `{}` has no parameter curve", self.config.name))),
        }
    }
}

fn matrices(ms: &[super::config::MatrixSpec], n: usize, field: &str) -> Result<Vec<Operator>> {
    ms.iter()
        .enumerate()
        .map(|(i, m)| operator(m, n, &format!("{field}[{i}]")))
        .collect()
}

/// Field as configured, before any gauge change.
pub fn gauge_field(config: &ScenarioConfig) -> Result<GaugeField> {
    let n = config.dimension;
    let d = config.parameter_dimension.unwrap_or(0);
    let spec = config
        .gauge_field
        .as_ref()
        .ok_or_else(|| Error::validation("gauge_field", "required for curve scenarios"))?;
    let field = match spec {
        GaugeFieldSpec::Zero => GaugeField::zero(n, d),
        GaugeFieldSpec::Constant { matrices: ms } => GaugeField::constant(matrices(ms, n, "gauge_field.matrices")?)?,
        GaugeFieldSpec::Linear { base, slopes } => {
            let base = matrices(base, n, "gauge_field.base")?;
            let slopes = slopes
                .iter()
                .enumerate()
                .map(|(a, row)| matrices(row, n, &format!("gauge_field.slopes[{a}]")))
                .collect::<Result<Vec<_>>>()?;
            GaugeField::linear(base, slopes)?
        }
        GaugeFieldSpec::PureGauge { generators } => pure_gauge(&GaugeTransformation::from_generators(matrices(
            generators,
            n,
            "gauge_field.generators",
        )?)?),
        GaugeFieldSpec::SphereSpin { twice_spin } => GaugeField::sphere_spin(*twice_spin)?,
    };
    Ok(field.allow_non_hermitian(config.allow_non_hermitian))
}

/// Configured curve stretched over `[min, max]` of the grid, starting at the
/// grid's first time.
pub fn curve(config: &ScenarioConfig, grid: &TimeGrid) -> Result<ParameterCurve> {
    let (lo, hi) = (grid.start().min(grid.end()), grid.start().max(grid.end()));
    let forward = grid.end() > grid.start();
    let spec = config
        .curve
        .as_ref()
        .ok_or_else(|| Error::validation("curve", "required for curve scenarios"))?;
    match spec {
        CurveSpec::Line { from, to } => {
            let (a, b) = if forward { (from, to) } else { (to, from) };
            ParameterCurve::line(a.clone(), b.clone(), lo, hi)
        }
        CurveSpec::CircleOnSphere { theta, omega } => ParameterCurve::circle_on_sphere(*theta, *omega, lo, hi),
        CurveSpec::SquareLoop { origin, a, b, side } => {
            let square = ParameterCurve::square_loop(origin.clone(), *a, *b, *side)?;
            let (scale, offset) = if forward {
                (4.0 / (hi - lo), -4.0 * lo / (hi - lo))
            } else {
                (-4.0 / (hi - lo), 4.0 * hi / (hi - lo))
            };
            reparametrize(&square, &Reparametrization::affine(scale, offset, lo, hi)?)
        }
    }
}

pub fn section(config: &ScenarioConfig) -> Result<SectionHamiltonian> {
    let n = config.dimension;
    Ok(match &config.section_hamiltonian {
        None | Some(SectionSpec::Zero) => SectionHamiltonian::zero(n),
        Some(SectionSpec::Constant { matrix }) => {
            SectionHamiltonian::constant(operator(matrix, n, "section_hamiltonian.matrix")?)
        }
        Some(SectionSpec::SpinInField { twice_spin, larmor }) => {
            SectionHamiltonian::spin_in_field(*twice_spin, *larmor, config.hbar)?
        }
    })
}

fn reparametrization(spec: &ReparametrizationSpec) -> Result<Reparametrization> {
    match spec {
        ReparametrizationSpec::Affine { scale, offset, domain } => {
            Reparametrization::affine(*scale, *offset, domain[0], domain[1])
        }
        ReparametrizationSpec::Power { exponent, domain } => Reparametrization::power(*exponent, domain[0], domain[1]),
    }
}

fn curve_setup(config: &ScenarioConfig, grid: &TimeGrid) -> Result<CurveSetup> {
    let field = gauge_field(config)?;
    let curve = curve(config, grid)?;
    let section = section(config)?;
    let reparametrized = match &config.reparametrization {
        None => None,
        Some(spec) => {
            let f = reparametrization(spec)?;
            let new_curve = reparametrize(&curve, &f)?;
            let (a, b) = (f.t_start(), f.t_end());
            // the end of the s-domain that lands on the grid's first time
            let starts_at_a = (f.value(a) - grid.start()).abs() <= (f.value(b) - grid.start()).abs();
            let (s0, s1) = if starts_at_a { (a, b) } else { (b, a) };
            Some((new_curve, TimeGrid::new(s0, s1, grid.steps())?))
        }
    };
    Ok(CurveSetup {
        field,
        curve,
        section,
        reparametrized,
    })
}

fn metric_setup(config: &ScenarioConfig) -> Result<MetricSetup> {
    let n = config.dimension;
    let generator = match config
        .generator
        .as_ref()
        .ok_or_else(|| Error::validation("generator", "required for metric scenarios"))?
    {
        GeneratorSpec::Constant { matrix } => NonHermitianGenerator::constant(operator(matrix, n, "generator.matrix")?),
        GeneratorSpec::PtTwolevel { r, theta, s } => NonHermitianGenerator::pt_twolevel(*r, *theta, *s)?,
    };
    let eta0 = match &config.metric {
        None => MetricOperator::identity(n),
        Some(m) => MetricOperator::new(operator(&m.eta0, n, "metric.eta0")?)?,
    };
    Ok(MetricSetup { generator, eta0 })
}
