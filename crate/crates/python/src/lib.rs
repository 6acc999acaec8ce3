//! Python bindings.

use hilbundle::geometry::{curvature, GaugeField, ParameterPoint};
use hilbundle::integrator::{Integrator, TimeGrid};
use hilbundle::linalg::{self, MetricOperator, StateVector, C64};
use hilbundle::metric::{evolve_metric, NonHermitianGenerator};
use hilbundle::scenario::{self, RunOptions, RunReport, ScenarioConfig};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(hilbundle, HilbundleError, PyException, "Raised for every library failure; the message starts with the error kind.");

fn to_py(e: hilbundle::Error) -> PyErr {
    HilbundleError::new_err(format!("{}: {e}", e.kind()))
}

/// Dense complex square matrix.
#[pyclass(name = "Operator", module = "hilbundle", frozen, from_py_object)]
#[derive(Clone)]
struct PyOperator(linalg::Operator);

#[pymethods]
impl PyOperator {
    #[new]
    fn new(rows: Vec<Vec<C64>>) -> PyResult<Self> {
        linalg::Operator::from_rows(&rows).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(linalg::Operator::identity(n))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rows(&self) -> Vec<Vec<C64>> {
        self.0.rows()
    }

    fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    fn exp(&self) -> Self {
        Self(linalg::matrix_exp(&self.0))
    }

    fn eigenvalues(&self) -> PyResult<Vec<C64>> {
        linalg::eigenvalues(&self.0).map_err(to_py)
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn is_hermitian(&self, tol: f64) -> bool {
        linalg::is_hermitian(&self.0, tol)
    }

    fn max_diff(&self, other: &Self) -> PyResult<f64> {
        same_dim(self, other)?;
        Ok(self.0.max_diff(&other.0))
    }

    fn apply(&self, psi: Vec<C64>) -> PyResult<Vec<C64>> {
        let psi = state(psi)?;
        Ok(self.0.apply(&psi).map_err(to_py)?.components().to_vec())
    }

    fn __matmul__(&self, other: &Self) -> PyResult<Self> {
        same_dim(self, other)?;
        Ok(Self(&self.0 * &other.0))
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        same_dim(self, other)?;
        Ok(Self(&self.0 + &other.0))
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        same_dim(self, other)?;
        Ok(Self(&self.0 - &other.0))
    }

    fn __mul__(&self, factor: C64) -> Self {
        Self(self.0.scale(factor))
    }

    fn __rmul__(&self, factor: C64) -> Self {
        Self(self.0.scale(factor))
    }

    fn __repr__(&self) -> String {
        format!("Operator({:?})", self.0.rows())
    }
}

fn same_dim(a: &PyOperator, b: &PyOperator) -> PyResult<()> {
    if a.0.dim() != b.0.dim() {
        return Err(to_py(hilbundle::Error::Dimension(format!("{} vs {}", a.0.dim(), b.0.dim()))));
    }
    Ok(())
}

fn state(components: Vec<C64>) -> PyResult<StateVector> {
    StateVector::new(components).map_err(to_py)
}

fn metric(eta: Option<&PyOperator>) -> PyResult<Option<MetricOperator>> {
    eta.map(|e| MetricOperator::new(e.0.clone()).map_err(to_py)).transpose()
}

/// `⟨x, y⟩`, or `⟨x, η y⟩` when `eta` is given.
#[pyfunction]
#[pyo3(signature = (x, y, eta = None))]
fn inner_product(x: Vec<C64>, y: Vec<C64>, eta: Option<&PyOperator>) -> PyResult<C64> {
    let (x, y) = (state(x)?, state(y)?);
    match metric(eta)? {
        Some(eta) => linalg::metric_inner_product(&eta, &x, &y),
        None => linalg::inner_product(&x, &y),
    }
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (op, psi, eta = None))]
fn expectation_value(op: &PyOperator, psi: Vec<C64>, eta: Option<&PyOperator>) -> PyResult<C64> {
    linalg::expectation_value(&op.0, &state(psi)?, metric(eta)?.as_ref()).map_err(to_py)
}

#[pyfunction]
fn pauli() -> Vec<PyOperator> {
    linalg::pauli().into_iter().map(PyOperator).collect()
}

#[pyfunction]
fn spin_matrices(twice_spin: usize) -> PyResult<Vec<PyOperator>> {
    Ok(linalg::spin_matrices(twice_spin).map_err(to_py)?.into_iter().map(PyOperator).collect())
}

/// `F_ab` of the constant field with the given components, at `point`.
#[pyfunction]
#[pyo3(signature = (components, a, b, point = None, fd_step = 1e-4))]
fn constant_field_curvature(
    components: Vec<PyOperator>,
    a: usize,
    b: usize,
    point: Option<Vec<f64>>,
    fd_step: f64,
) -> PyResult<PyOperator> {
    let d = components.len();
    let field = GaugeField::constant(components.into_iter().map(|c| c.0).collect()).map_err(to_py)?;
    let point = ParameterPoint::new(point.unwrap_or_else(|| vec![0.0; d])).map_err(to_py)?;
    curvature(&field, a, b, &point, fd_step).map(PyOperator).map_err(to_py)
}

/// `η(t_k)` for a constant generator on `[0, t_end]`.
#[pyfunction]
#[pyo3(signature = (generator, eta0, t_end, steps, hbar = 1.0))]
fn metric_trajectory(
    generator: &PyOperator,
    eta0: &PyOperator,
    t_end: f64,
    steps: usize,
    hbar: f64,
) -> PyResult<Vec<PyOperator>> {
    let gen = NonHermitianGenerator::constant(generator.0.clone());
    let eta0 = MetricOperator::new(eta0.0.clone()).map_err(to_py)?;
    let grid = TimeGrid::new(0.0, t_end, steps).map_err(to_py)?;
    let traj = evolve_metric(&gen, &eta0, &grid, hbar, Integrator::Magnus4).map_err(to_py)?;
    Ok(traj.eta().iter().map(|e| PyOperator(e.op().clone())).collect())
}

/// Validated scenario configuration.
#[pyclass(name = "Scenario", module = "hilbundle", frozen)]
struct PyScenario(ScenarioConfig);

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        scenario::parse_config(text).map(Self).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension
    }

    fn to_json(&self) -> String {
        scenario::to_json(&self.0)
    }

    fn applicable_checks(&self) -> Vec<&'static str> {
        self.0.applicable_checks()
    }

    /// Evolves and evaluates checks in memory; returns the report and the
    /// trajectory CSV text.
    #[pyo3(signature = (steps = None, tol_scale = 1.0))]
    fn run(&self, py: Python<'_>, steps: Option<usize>, tol_scale: f64) -> PyResult<(PyReport, String)> {
        let opts = RunOptions {
            steps,
            tol_scale,
            ..RunOptions::default()
        };
        let (report, csv) = py
            .detach(|| scenario::run_report(&self.0, &opts))
            .map_err(to_py)?;
        Ok((PyReport(report), csv))
    }

    #[pyo3(signature = (suite = "all", steps = None, tol_scale = 1.0))]
    fn check(&self, py: Python<'_>, suite: &str, steps: Option<usize>, tol_scale: f64) -> PyResult<PyReport> {
        let opts = RunOptions {
            steps,
            tol_scale,
            ..RunOptions::default()
        };
        py.detach(|| scenario::check(&self.0, suite, &opts))
            .map(PyReport)
            .map_err(to_py)
    }
}

#[pyclass(name = "Report", module = "hilbundle", frozen)]
struct PyReport(RunReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn passed(&self) -> bool {
        self.0.passed()
    }

    /// `(name, measured, threshold, pass)` per check.
    fn checks(&self) -> Vec<(String, f64, f64, bool)> {
        self.0
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.measured, c.threshold, c.pass))
            .collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }
}

#[pyfunction]
fn build_spin_scenario(twice_spin: usize, larmor: f64, omega: f64, theta: f64) -> PyResult<PyScenario> {
    scenario::build_spin_scenario(twice_spin, larmor, omega, theta)
        .map(PyScenario)
        .map_err(to_py)
}

#[pymodule(name = "hilbundle")]
fn hilbundle_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HilbundleError", m.py().get_type::<HilbundleError>())?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(inner_product, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_value, m)?)?;
    m.add_function(wrap_pyfunction!(pauli, m)?)?;
    m.add_function(wrap_pyfunction!(spin_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(constant_field_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(metric_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(build_spin_scenario, m)?)?;
    Ok(())
}
