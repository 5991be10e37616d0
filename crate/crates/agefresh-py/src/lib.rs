//! Python bindings for the freshness-metrics library.
//!
//! The extension module `agefresh_py` exposes the library's main types and
//! operations with a thin, keyword-friendly surface:
//!
//! | Python name                        | Wraps                                     |
//! |------------------------------------|-------------------------------------------|
//! | `Distribution`                     | service/vacation/switchover distributions |
//! | `Metrics`                          | exact AoI, PAoI, Var(peak) triple         |
//! | `Estimate`, `SimResult`            | simulator point estimates with 95% CIs    |
//! | `metrics`                          | single-queue vacation metrics             |
//! | `metrics_no_vacation`              | bufferless limit systems                  |
//! | `polling_paoi`                     | exact per-station PAoI for a polling ring |
//! | `simulate`, `simulate_polling`     | discrete-event cross-checks               |
//! | `paoi_gap_cbs_minus_brs`           | replacement-vs-rejection PAoI gap         |
//! | `exp_service_dominance`            | preemption gaps under exponential service |
//! | `preemption_sufficient_condition`  | grid test of the preemption condition     |
//! | `vacation_decay_margin`            | mean start-age margin, always nonnegative |
//!
//! Policies are passed as strings (`"cbs"`, `"brs"`, `"cbsp"`), routing
//! schemes likewise (`"cyclic"`, `"lop"`, `"symmetric"`), and the bufferless
//! systems by their canonical names (`"m_g_1_1"`, `"m_g_1_2star"`,
//! `"m_g_1_1_preemptive"`).
//!
//! # Design Notes
//!
//! Arrival rates are named `arrival_rate` rather than lambda because
//! `lambda` is a Python keyword and could never be passed by keyword.
//! Validation failures raise `ValueError`; solver-level numerical failures
//! raise `RuntimeError`. Build with `cargo build -p agefresh-py` and load
//! the produced `libagefresh_py.so` as `agefresh_py.so` (see
//! `python/smoke_test.py` for a loader that does this).

use agefresh::analytic::{self, IidVacationModel, NoVacationSystem, Policy};
use agefresh::distributions::{DistributionSpec, LstQuery};
use agefresh::dominance;
use agefresh::polling::{self, build_routing, PollingModel, RoutingScheme};
use agefresh::sim::{self, Estimate, SimConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

// =====================================================================
// Error mapping
// =====================================================================

/// Caller mistakes become `ValueError`; numerical trouble that no retry
/// will fix becomes `RuntimeError`.
fn to_py(err: agefresh::Error) -> PyErr {
    match &err {
        agefresh::Error::SingularSystem { .. }
        | agefresh::Error::NumericalInconsistency { .. } => {
            PyRuntimeError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn parse_policy(name: &str) -> PyResult<Policy> {
    name.parse::<Policy>().map_err(to_py)
}

fn parse_system(name: &str) -> PyResult<NoVacationSystem> {
    NoVacationSystem::ALL
        .into_iter()
        .find(|system| system.name() == name)
        .ok_or_else(|| {
            let valid: Vec<&str> = NoVacationSystem::ALL.iter().map(|s| s.name()).collect();
            PyValueError::new_err(format!(
                "unknown system `{name}`, expected one of {valid:?}"
            ))
        })
}

// =====================================================================
// Wrapped types
// =====================================================================

/// A service, vacation, or switchover time distribution.
#[pyclass(frozen, name = "Distribution", module = "agefresh_py")]
#[derive(Clone, Copy)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    /// Exponential with the given rate (mean `1/rate`).
    #[staticmethod]
    fn exponential(rate: f64) -> PyResult<Self> {
        Ok(PyDistribution { inner: DistributionSpec::exponential(rate).map_err(to_py)? })
    }

    /// Gamma with the given shape and scale (mean `shape * scale`).
    #[staticmethod]
    fn gamma(shape: f64, scale: f64) -> PyResult<Self> {
        Ok(PyDistribution { inner: DistributionSpec::gamma(shape, scale).map_err(to_py)? })
    }

    /// Point mass at `value`.
    #[staticmethod]
    fn deterministic(value: f64) -> PyResult<Self> {
        Ok(PyDistribution { inner: DistributionSpec::deterministic(value).map_err(to_py)? })
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// Raw moment `E[X^n]` for `n` in 0..=4.
    fn moment(&self, n: u32) -> PyResult<f64> {
        self.inner.moment(n).map_err(to_py)
    }

    /// Laplace-Stieltjes transform value `X*(s)`, or its signed
    /// derivative `X*^(order)(s)` for `order` in {1, 2}.
    #[pyo3(signature = (s, order = 0))]
    fn lst(&self, s: f64, order: usize) -> PyResult<f64> {
        Ok(self.inner.lst(LstQuery::new(s, order).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!("Distribution({})", self.inner)
    }
}

/// Exact metric triple: time-average age, mean peak age, peak-age variance.
#[pyclass(frozen, name = "Metrics", module = "agefresh_py")]
struct PyMetrics {
    #[pyo3(get)]
    aoi: f64,
    #[pyo3(get)]
    paoi: f64,
    #[pyo3(get)]
    var_peak: f64,
}

impl From<analytic::FreshnessMetrics> for PyMetrics {
    fn from(m: analytic::FreshnessMetrics) -> Self {
        PyMetrics { aoi: m.aoi, paoi: m.paoi, var_peak: m.var_peak }
    }
}

#[pymethods]
impl PyMetrics {
    fn __repr__(&self) -> String {
        format!(
            "Metrics(aoi={}, paoi={}, var_peak={})",
            self.aoi, self.paoi, self.var_peak
        )
    }
}

/// A simulator point estimate with its 95% confidence half-width.
#[pyclass(frozen, name = "Estimate", module = "agefresh_py")]
#[derive(Clone, Copy)]
struct PyEstimate {
    #[pyo3(get)]
    mean: f64,
    #[pyo3(get)]
    half_width_95: f64,
}

impl From<Estimate> for PyEstimate {
    fn from(e: Estimate) -> Self {
        PyEstimate { mean: e.mean, half_width_95: e.half_width_95 }
    }
}

#[pymethods]
impl PyEstimate {
    /// True when `value` lies inside the 95% interval.
    fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width_95
    }

    fn __repr__(&self) -> String {
        format!("Estimate(mean={}, half_width_95={})", self.mean, self.half_width_95)
    }
}

/// Simulation estimates for all three metrics of one queue.
#[pyclass(frozen, name = "SimResult", module = "agefresh_py")]
#[derive(Clone, Copy)]
struct PySimResult {
    #[pyo3(get)]
    aoi: PyEstimate,
    #[pyo3(get)]
    paoi: PyEstimate,
    #[pyo3(get)]
    var_peak: PyEstimate,
}

impl From<sim::SimEstimates> for PySimResult {
    fn from(e: sim::SimEstimates) -> Self {
        PySimResult {
            aoi: e.aoi.into(),
            paoi: e.paoi.into(),
            var_peak: e.var_peak.into(),
        }
    }
}

#[pymethods]
impl PySimResult {
    fn __repr__(&self) -> String {
        format!(
            "SimResult(aoi={}, paoi={}, var_peak={})",
            self.aoi.__repr__(),
            self.paoi.__repr__(),
            self.var_peak.__repr__()
        )
    }
}

// =====================================================================
// Model assembly helpers
// =====================================================================

fn iid_model(
    arrival_rate: f64,
    service: &PyDistribution,
    vacation: &PyDistribution,
) -> PyResult<IidVacationModel> {
    IidVacationModel::new(arrival_rate, service.inner, vacation.inner).map_err(to_py)
}

fn polling_model(
    arrival_rates: Vec<f64>,
    services: Vec<PyDistribution>,
    switchover: &PyDistribution,
    scheme: &str,
    routing: Option<Vec<Vec<f64>>>,
) -> PyResult<PollingModel> {
    let k = arrival_rates.len();
    let routing = match routing {
        Some(rows) => rows,
        None => {
            let scheme = scheme.parse::<RoutingScheme>().map_err(to_py)?;
            build_routing(scheme, &arrival_rates).map_err(to_py)?
        }
    };
    let services = services.into_iter().map(|d| d.inner).collect();
    let switchovers = vec![vec![switchover.inner; k]; k];
    PollingModel::new(arrival_rates, services, switchovers, routing).map_err(to_py)
}

fn sim_config(
    peaks: usize,
    warmup: Option<usize>,
    seed: u64,
    replications: usize,
    batches: usize,
) -> PyResult<SimConfig> {
    SimConfig::with(peaks, warmup.unwrap_or(peaks / 100), seed, replications, batches)
        .map_err(to_py)
}

// =====================================================================
// Exact solvers
// =====================================================================

/// Exact AoI, PAoI, and Var(peak) for a single-buffer vacation queue.
#[pyfunction]
#[pyo3(signature = (arrival_rate, service, vacation, policy = "cbs"))]
fn metrics(
    arrival_rate: f64,
    service: PyDistribution,
    vacation: PyDistribution,
    policy: &str,
) -> PyResult<PyMetrics> {
    let model = iid_model(arrival_rate, &service, &vacation)?;
    let policy = parse_policy(policy)?;
    Ok(analytic::metrics(&model, policy).map_err(to_py)?.into())
}

/// Exact metrics for the bufferless limit systems (no vacations).
#[pyfunction]
fn metrics_no_vacation(
    arrival_rate: f64,
    service: PyDistribution,
    system: &str,
) -> PyResult<PyMetrics> {
    let system = parse_system(system)?;
    Ok(analytic::metrics_no_vacation(arrival_rate, &service.inner, system)
        .map_err(to_py)?
        .into())
}

/// Exact per-station PAoI for a polling system.
///
/// Returns `(per_queue, average)`. `switchover` applies to every
/// station pair; pass `routing` (row-stochastic matrix) to override the
/// named scheme.
#[pyfunction]
#[pyo3(signature = (arrival_rates, services, switchover, scheme = "cyclic", policy = "cbs", routing = None))]
fn polling_paoi(
    arrival_rates: Vec<f64>,
    services: Vec<PyDistribution>,
    switchover: PyDistribution,
    scheme: &str,
    policy: &str,
    routing: Option<Vec<Vec<f64>>>,
) -> PyResult<(Vec<f64>, f64)> {
    let model = polling_model(arrival_rates, services, &switchover, scheme, routing)?;
    let policy = parse_policy(policy)?;
    let result = polling::paoi(&model, policy).map_err(to_py)?;
    Ok((result.per_queue, result.average))
}

// =====================================================================
// Simulators
// =====================================================================

/// Discrete-event estimates for a single-buffer vacation queue.
#[pyfunction]
#[pyo3(signature = (arrival_rate, service, vacation, policy = "cbs", peaks = 100_000,
                    warmup = None, seed = 1, replications = 1, batches = 32))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    arrival_rate: f64,
    service: PyDistribution,
    vacation: PyDistribution,
    policy: &str,
    peaks: usize,
    warmup: Option<usize>,
    seed: u64,
    replications: usize,
    batches: usize,
) -> PyResult<PySimResult> {
    let model = iid_model(arrival_rate, &service, &vacation)?;
    let policy = parse_policy(policy)?;
    let config = sim_config(peaks, warmup, seed, replications, batches)?;
    Ok(sim::simulate_iid(&model, policy, &config).map_err(to_py)?.into())
}

/// Discrete-event per-station estimates for a polling system.
#[pyfunction]
#[pyo3(signature = (arrival_rates, services, switchover, scheme = "cyclic", policy = "cbs",
                    peaks = 20_000, warmup = None, seed = 1, replications = 1, batches = 32,
                    routing = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_polling(
    arrival_rates: Vec<f64>,
    services: Vec<PyDistribution>,
    switchover: PyDistribution,
    scheme: &str,
    policy: &str,
    peaks: usize,
    warmup: Option<usize>,
    seed: u64,
    replications: usize,
    batches: usize,
    routing: Option<Vec<Vec<f64>>>,
) -> PyResult<Vec<PySimResult>> {
    let model = polling_model(arrival_rates, services, &switchover, scheme, routing)?;
    let policy = parse_policy(policy)?;
    let config = sim_config(peaks, warmup, seed, replications, batches)?;
    Ok(sim::simulate_polling(&model, policy, &config)
        .map_err(to_py)?
        .into_iter()
        .map(PySimResult::from)
        .collect())
}

// =====================================================================
// Dominance diagnostics
// =====================================================================

/// PAoI under rejection minus PAoI under replacement; nonnegative for
/// every iid-vacation model.
#[pyfunction]
fn paoi_gap_cbs_minus_brs(
    arrival_rate: f64,
    service: PyDistribution,
    vacation: PyDistribution,
) -> PyResult<f64> {
    let model = iid_model(arrival_rate, &service, &vacation)?;
    dominance::paoi_gap_cbs_minus_brs(&model).map_err(to_py)
}

/// `(aoi_gap, paoi_gap)` of preemption under exponential service; both
/// nonnegative. Raises `ValueError` for non-exponential service.
#[pyfunction]
fn exp_service_dominance(
    arrival_rate: f64,
    service: PyDistribution,
    vacation: PyDistribution,
) -> PyResult<(f64, f64)> {
    let model = iid_model(arrival_rate, &service, &vacation)?;
    let gaps = dominance::exp_service_dominance(&model).map_err(to_py)?;
    Ok((gaps.aoi_gap, gaps.paoi_gap))
}

/// Grid test of `E[H] >= (1 - H*(s)) / (s H*(s))`, the condition under
/// which preemption cannot hurt PAoI.
///
/// Returns `(holds_on_grid, margin, holds_for_all_s)` where the last
/// entry is the exact classification when the family admits one.
#[pyfunction]
fn preemption_sufficient_condition(
    service: PyDistribution,
    s_grid: Vec<f64>,
) -> PyResult<(bool, f64, Option<bool>)> {
    let cond =
        dominance::preemption_sufficient_condition(&service.inner, &s_grid).map_err(to_py)?;
    Ok((cond.holds_on_grid, cond.margin, cond.holds_for_all_s))
}

/// Mean start age of the vacation-gated policies; nonnegative for every
/// vacation distribution and arrival rate.
#[pyfunction]
fn vacation_decay_margin(vacation: PyDistribution, arrival_rate: f64) -> PyResult<f64> {
    dominance::vacation_decay_margin(&vacation.inner, arrival_rate).map_err(to_py)
}

// =====================================================================
// Module definition
// =====================================================================

#[pymodule]
fn agefresh_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyMetrics>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PySimResult>()?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(metrics_no_vacation, m)?)?;
    m.add_function(wrap_pyfunction!(polling_paoi, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_polling, m)?)?;
    m.add_function(wrap_pyfunction!(paoi_gap_cbs_minus_brs, m)?)?;
    m.add_function(wrap_pyfunction!(exp_service_dominance, m)?)?;
    m.add_function(wrap_pyfunction!(preemption_sufficient_condition, m)?)?;
    m.add_function(wrap_pyfunction!(vacation_decay_margin, m)?)?;
    m.add("POLICIES", ["cbs", "brs", "cbsp"])?;
    m.add("SCHEMES", ["cyclic", "lop", "symmetric"])?;
    m.add("SYSTEMS", ["m_g_1_1", "m_g_1_2star", "m_g_1_1_preemptive"])?;
    Ok(())
}
