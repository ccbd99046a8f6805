//! Python bindings: configuration, ring plans, planners, coverage and Monte Carlo validation.
//!
//! Structured results are returned as plain dicts (via JSON), plans and plan
//! results as small wrapper classes.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use irsplan::channel::{self, LinkGeometry};
use irsplan::cli::{self, ExperimentConfig};
use irsplan::geometry::{self, RingPlan};
use irsplan::numerics;
use irsplan::planner::{self, PlanResult, Planner};
use irsplan::powerctl;
use irsplan::simulation;
use irsplan::Error;

create_exception!(irsplan, InfeasibleError, PyValueError, "No placement satisfies the constraints.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Infeasible(reasons) => InfeasibleError::new_err(reasons.join("; ")),
        Error::Config(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Resolved experiment configuration.
#[pyclass(name = "ExperimentConfig", module = "irsplan", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// TOML text plus `key=value` overrides; both default to the reference setup.
    #[new]
    #[pyo3(signature = (toml = "", overrides = Vec::new()))]
    fn new(toml: &str, overrides: Vec<String>) -> PyResult<Self> {
        let inner = ExperimentConfig::from_toml(toml, &overrides).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides = Vec::new()))]
    fn from_file(path: std::path::PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        let inner = ExperimentConfig::load(Some(&path), &overrides).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Copy with extra overrides applied.
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        let text = toml::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Self::new(&text, overrides)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner)
    }

    #[getter]
    fn cell_radius(&self) -> f64 {
        self.inner.cell.radius
    }

    #[getter]
    fn users(&self) -> u32 {
        self.inner.cell.users
    }

    #[getter]
    fn elements(&self) -> u32 {
        self.inner.irs.elements
    }

    #[getter]
    fn target_nop(&self) -> f64 {
        self.inner.outage.target_nop
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.mc.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "ExperimentConfig(radius={}, users={}, elements={}, target_nop={})",
            self.inner.cell.radius, self.inner.cell.users, self.inner.irs.elements, self.inner.outage.target_nop
        )
    }
}

/// Ring partition of the cell.
#[pyclass(name = "RingPlan", module = "irsplan", from_py_object)]
#[derive(Clone)]
struct PyRingPlan {
    inner: RingPlan,
}

#[pymethods]
impl PyRingPlan {
    /// `radii = [R_in,0, ..., R_in,I]`, `irs_counts = [M_1, ..., M_I]`.
    #[new]
    fn new(config: &PyConfig, radii: Vec<f64>, irs_counts: Vec<u32>) -> PyResult<Self> {
        let inner = RingPlan::new(&config.inner.cell, radii, irs_counts).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn ap_only(config: &PyConfig) -> Self {
        Self {
            inner: RingPlan::ap_only(&config.inner.cell),
        }
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii.clone()
    }

    #[getter]
    fn irs_counts(&self) -> Vec<u32> {
        self.inner.irs_counts.clone()
    }

    #[getter]
    fn irs_radii(&self) -> Vec<f64> {
        self.inner.irs_radii.clone()
    }

    #[getter]
    fn power_ratios(&self) -> Vec<f64> {
        self.inner.power_ratios.clone()
    }

    #[getter]
    fn rings(&self) -> usize {
        self.inner.rings()
    }

    #[getter]
    fn total_irs(&self) -> u32 {
        self.inner.total_irs()
    }

    /// `(ring, sector)` serving the UE at `(r, azimuth)`, or `None` if AP-only.
    fn locate(&self, config: &PyConfig, r: f64, azimuth: f64) -> PyResult<Option<(usize, usize)>> {
        let loc = geometry::locate_ue(&config.inner.cell, &self.inner, r, azimuth).map_err(to_py)?;
        Ok(match loc.region {
            geometry::Region::ApOnly => None,
            geometry::Region::Irs { ring, sector } => Some((ring, sector)),
        })
    }

    /// Violated constraints as dicts; empty when the plan is admissible.
    fn violations<'py>(&self, py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &geometry::validate_plan(&config.inner.cell, &self.inner))
    }

    fn __repr__(&self) -> String {
        format!("RingPlan(radii={:?}, irs_counts={:?})", self.inner.radii, self.inner.irs_counts)
    }
}

/// A placement with its power split.
#[pyclass(name = "PlanResult", module = "irsplan", from_py_object)]
#[derive(Clone)]
struct PyPlanResult {
    inner: PlanResult,
}

#[pymethods]
impl PyPlanResult {
    #[getter]
    fn method(&self) -> String {
        self.inner.method.clone()
    }

    #[getter]
    fn nu_bar(&self) -> f64 {
        self.inner.nu_bar
    }

    #[getter]
    fn eta0(&self) -> f64 {
        self.inner.allocation.eta0_star
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.allocation.rate
    }

    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.allocation.rho.clone()
    }

    #[getter]
    fn plan(&self) -> PyRingPlan {
        PyRingPlan {
            inner: self.inner.plan.clone(),
        }
    }

    /// Per-region rows: ring 0 is the AP-only region.
    fn ring_table<'py>(&self, py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &cli::ring_table(&config.inner.cell, &self.inner))
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "PlanResult(method={:?}, nu_bar={}, irs_counts={:?})",
            self.inner.method, self.inner.nu_bar, self.inner.plan.irs_counts
        )
    }
}

fn planner(config: &PyConfig) -> PyResult<Planner> {
    let model = config.inner.model().map_err(to_py)?;
    Planner::new(model, config.inner.grid).map_err(to_py)
}

/// Optimal ring layout with at most `max_rings` rings.
#[pyfunction]
#[pyo3(signature = (config, irs_total, max_rings = 3))]
fn line_search(py: Python<'_>, config: &PyConfig, irs_total: u32, max_rings: usize) -> PyResult<PyPlanResult> {
    let mut p = planner(config)?;
    let inner = py.detach(|| p.line_search(irs_total, max_rings)).map_err(to_py)?;
    Ok(PyPlanResult { inner })
}

/// Constructive ring heuristic with at most `max_rings` rings.
#[pyfunction]
#[pyo3(signature = (config, irs_total, max_rings = 10))]
fn algorithm1(py: Python<'_>, config: &PyConfig, irs_total: u32, max_rings: usize) -> PyResult<PyPlanResult> {
    let mut p = planner(config)?;
    let inner = py.detach(|| p.algorithm1(irs_total, max_rings)).map_err(to_py)?;
    Ok(PyPlanResult { inner })
}

/// Power split and common throughput of a given layout.
#[pyfunction]
#[pyo3(signature = (config, plan, method = "manual"))]
fn evaluate_plan(config: &PyConfig, plan: &PyRingPlan, method: &str) -> PyResult<PyPlanResult> {
    let model = config.inner.model().map_err(to_py)?;
    let inner = PlanResult::evaluate(&model, method, plan.inner.clone()).map_err(to_py)?;
    Ok(PyPlanResult { inner })
}

/// Coverage range in m, with an IRS at distance `l` on the AP-UE line if given.
#[pyfunction]
#[pyo3(signature = (config, l = None))]
fn coverage_range<'py>(py: Python<'py>, config: &PyConfig, l: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let c = &config.inner;
    let cov = planner::coverage_range(&c.radio, &c.irs, c.coverage.power, c.coverage.threshold, l).map_err(to_py)?;
    to_dict(py, &cov)
}

/// Coverage rows over the configured AP-IRS distance range.
#[pyfunction]
fn coverage_sweep<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let res = py.detach(|| cli::coverage_sweep(&config.inner)).map_err(to_py)?;
    to_dict(py, &res)
}

/// Sweep rows for the configured IRS totals and methods.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyAny>> {
    let rows = py.detach(|| cli::sweep(&config.inner)).map_err(to_py)?;
    to_dict(py, &rows)
}

/// AP-only baselines and, with a plan, the two IRS power-control benchmarks.
#[pyfunction]
#[pyo3(signature = (config, plan = None))]
fn benchmarks<'py>(py: Python<'py>, config: &PyConfig, plan: Option<&PyRingPlan>) -> PyResult<Bound<'py, PyAny>> {
    let c = &config.inner;
    let p_no = c.outage.target_nop;
    let mut out = vec![
        powerctl::benchmark_equal_power(&c.radio, &c.cell, p_no).map_err(to_py)?,
        powerctl::benchmark_cipc(&c.radio, &c.cell, p_no).map_err(to_py)?,
    ];
    if let Some(p) = plan {
        out.push(powerctl::benchmark_irs_equal_power(&c.radio, &c.cell, &c.irs, &p.inner, p_no).map_err(to_py)?);
        out.push(powerctl::benchmark_irs_mean_cipc(&c.radio, &c.cell, &c.irs, &p.inner, p_no).map_err(to_py)?);
    }
    to_dict(py, &out)
}

/// Moments of the composite channel power and the matched Gamma law.
#[pyfunction]
fn composite_stats<'py>(py: Python<'py>, config: &PyConfig, r: f64, l: f64, d: f64) -> PyResult<Bound<'py, PyAny>> {
    let geom = LinkGeometry::new(r, l, d).map_err(to_py)?;
    let s = channel::composite_stats_at(&config.inner.radio, &config.inner.irs, &geom).map_err(to_py)?;
    to_dict(py, &s)
}

/// Monte Carlo check of a plan result under `config.mc`.
#[pyfunction]
fn validate_plan_mc<'py>(py: Python<'py>, config: &PyConfig, result: &PyPlanResult) -> PyResult<Bound<'py, PyAny>> {
    let model = config.inner.model().map_err(to_py)?;
    let mc = config.inner.mc;
    let report = py
        .detach(|| simulation::validate_plan_mc(&model, &result.inner, &mc))
        .map_err(to_py)?;
    to_dict(py, &report)
}

/// `Q(alpha, x)`, the regularized upper incomplete gamma function.
#[pyfunction]
fn reg_upper_gamma(alpha: f64, x: f64) -> PyResult<f64> {
    numerics::reg_upper_gamma(alpha, x).map_err(to_py)
}

/// `x` with `Q(alpha, x) = p`.
#[pyfunction]
fn inv_reg_upper_gamma(alpha: f64, p: f64) -> PyResult<f64> {
    numerics::inv_reg_upper_gamma(alpha, p).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "irsplan")]
fn irsplan_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add("SCHEMA_VERSION", cli::SCHEMA_VERSION)?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRingPlan>()?;
    m.add_class::<PyPlanResult>()?;
    m.add_function(wrap_pyfunction!(line_search, m)?)?;
    m.add_function(wrap_pyfunction!(algorithm1, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_plan, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_range, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(benchmarks, m)?)?;
    m.add_function(wrap_pyfunction!(composite_stats, m)?)?;
    m.add_function(wrap_pyfunction!(validate_plan_mc, m)?)?;
    m.add_function(wrap_pyfunction!(reg_upper_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(inv_reg_upper_gamma, m)?)?;
    Ok(())
}
