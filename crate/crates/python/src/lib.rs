//! Python bindings: closed-form chain quantities, the slot simulator, sweeps
//! and the validation harness.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use contention_lab::analytic::{self, ModelError as CoreModelError};
use contention_lab::experiments::{self, SweepSpec};
use contention_lab::simulator::{self, SimConfig, SimError};
use contention_lab::{ChainQuantities as CoreChain, ModelParams, SimStats as CoreStats};

create_exception!(contention_lab_py, ModelError, PyValueError);
create_exception!(contention_lab_py, DegenerateChainError, ModelError);
create_exception!(contention_lab_py, UnboundedError, ModelError);
create_exception!(contention_lab_py, SimulationError, PyValueError);
create_exception!(contention_lab_py, NotSupportedError, SimulationError);

fn model_err(e: CoreModelError) -> PyErr {
    match e {
        CoreModelError::DegenerateChain | CoreModelError::DegenerateUsers => {
            DegenerateChainError::new_err(e.to_string())
        }
        CoreModelError::UnboundedOccupancy | CoreModelError::UnboundedDelay => {
            UnboundedError::new_err(e.to_string())
        }
        _ => ModelError::new_err(e.to_string()),
    }
}

fn sim_err(e: SimError) -> PyErr {
    match e {
        SimError::NotSupported(_) => NotSupportedError::new_err(e.to_string()),
        SimError::ConfigInvalid(_) => SimulationError::new_err(e.to_string()),
    }
}

fn experiment_err(e: experiments::ExperimentError) -> PyErr {
    match e {
        experiments::ExperimentError::Sim(s) => sim_err(s),
        other => ModelError::new_err(other.to_string()),
    }
}

fn params(m: u32, pr: f64) -> PyResult<ModelParams> {
    ModelParams::new(m, pr).map_err(model_err)
}

/// Serializes through JSON so nested structures arrive as plain dicts.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Closed-form quantities for one `(m, pr)` point. `occupancy_u` and
/// `delay_d` are `inf` when unbounded.
#[pyclass(frozen, name = "ChainQuantities")]
struct PyChain {
    inner: CoreChain,
}

#[pymethods]
impl PyChain {
    #[getter]
    fn m(&self) -> u32 {
        self.inner.params.m()
    }
    #[getter]
    fn pr(&self) -> f64 {
        self.inner.params.pr()
    }
    #[getter]
    fn pt(&self) -> f64 {
        self.inner.params.pt()
    }
    #[getter]
    fn p0(&self) -> f64 {
        self.inner.matrix.p0
    }
    #[getter]
    fn pc(&self) -> f64 {
        self.inner.matrix.pc
    }
    #[getter]
    fn pi1(&self) -> f64 {
        self.inner.stationary.pi1
    }
    #[getter]
    fn pi2(&self) -> f64 {
        self.inner.stationary.pi2
    }
    #[getter]
    fn occupancy_u(&self) -> f64 {
        self.inner.occupancy_u
    }
    #[getter]
    fn q_mean(&self) -> f64 {
        self.inner.q_mean
    }
    #[getter]
    fn delay_d(&self) -> f64 {
        self.inner.delay_d
    }
    #[getter]
    fn per_user_throughput(&self) -> f64 {
        self.inner.per_user_throughput
    }

    fn __repr__(&self) -> String {
        format!(
            "ChainQuantities(m={}, pr={}, pi1={}, u={}, q={}, d={})",
            self.m(),
            self.pr(),
            self.pi1(),
            self.occupancy_u(),
            self.q_mean(),
            self.delay_d()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (m, pr, pt = 1.0))]
fn analyze(m: u32, pr: f64, pt: f64) -> PyResult<PyChain> {
    let p = ModelParams::with_pt(m, pr, pt).map_err(model_err)?;
    let inner = CoreChain::evaluate(&p).map_err(model_err)?;
    Ok(PyChain { inner })
}

/// Returns `(p0, pc)`.
#[pyfunction]
fn transition_probabilities(m: u32, pr: f64) -> PyResult<(f64, f64)> {
    let t = analytic::transition_probabilities(&params(m, pr)?);
    Ok((t.p0, t.pc))
}

/// Closed-form stationary distribution `(pi1, pi2)` of `[[pc, 1-pc], [p0, 1-p0]]`.
#[pyfunction]
fn stationary(p0: f64, pc: f64) -> PyResult<(f64, f64)> {
    let s = analytic::stationary_closed_form(&analytic::TransitionMatrix { pc, p0 })
        .map_err(model_err)?;
    Ok((s.pi1, s.pi2))
}

#[pyfunction]
fn stationary_linear_solve(p0: f64, pc: f64) -> PyResult<(f64, f64)> {
    let s = analytic::stationary_linear_solve(&analytic::TransitionMatrix { pc, p0 })
        .map_err(model_err)?;
    Ok((s.pi1, s.pi2))
}

#[pyfunction]
fn throughput(m: u32, pr: f64) -> PyResult<f64> {
    analytic::throughput(&params(m, pr)?).map_err(model_err)
}

#[pyfunction]
fn asymptotic_throughput_limit(m: u32) -> PyResult<f64> {
    if m == 0 {
        return Err(model_err(CoreModelError::InvalidUsers(0)));
    }
    Ok(analytic::asymptotic_throughput_limit(m))
}

#[pyfunction]
fn occupancy(m: u32, pr: f64) -> PyResult<f64> {
    analytic::occupancy(&params(m, pr)?).map_err(model_err)
}

#[pyfunction]
fn pr_from_occupancy(u: f64, m: u32) -> PyResult<f64> {
    analytic::pr_from_occupancy(u, m).map_err(model_err)
}

#[pyfunction]
fn q_mean(m: u32, pr: f64) -> PyResult<f64> {
    analytic::q_mean(&params(m, pr)?).map_err(model_err)
}

#[pyfunction]
fn delay(m: u32, pr: f64) -> PyResult<f64> {
    analytic::delay(&params(m, pr)?).map_err(model_err)
}

#[pyclass(frozen, name = "SimStats")]
struct PySimStats {
    inner: CoreStats,
}

#[pymethods]
impl PySimStats {
    #[getter]
    fn busy_fraction(&self) -> f64 {
        self.inner.busy_fraction
    }
    #[getter]
    fn ci_halfwidth(&self) -> f64 {
        self.inner.ci_halfwidth
    }
    #[getter]
    fn mean_holding(&self) -> Option<f64> {
        self.inner.mean_holding
    }
    #[getter]
    fn jain_index(&self) -> f64 {
        self.inner.jain_index
    }
    #[getter]
    fn per_user_success(&self) -> Vec<u64> {
        self.inner.per_user_success.clone()
    }
    #[getter]
    fn measured_slots(&self) -> u64 {
        self.inner.measured_slots
    }
    #[getter]
    fn completed_holdings(&self) -> u64 {
        self.inner.completed_holdings
    }
    #[getter]
    fn censored_holdings(&self) -> u64 {
        self.inner.censored_holdings
    }
    #[getter]
    fn holding_histogram<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (len, count) in &self.inner.holding_histogram {
            d.set_item(len, count)?;
        }
        Ok(d)
    }

    /// Every field as plain Python data.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimStats(busy_fraction={}, ci={}, mean_holding={:?}, jain={})",
            self.inner.busy_fraction,
            self.inner.ci_halfwidth,
            self.inner.mean_holding,
            self.inner.jain_index
        )
    }
}

fn sim_config(
    m: u32,
    pr: f64,
    slots: u64,
    seed: u64,
    warmup: Option<u64>,
    replications: u32,
    pt: f64,
) -> SimConfig {
    SimConfig {
        pt,
        replications,
        warmup: warmup.unwrap_or_else(|| simulator::default_warmup(slots)),
        ..SimConfig::new(m, pr, slots, seed)
    }
}

#[pyfunction]
#[pyo3(signature = (m, pr, slots = 1_000_000, seed = 1, warmup = None, replications = 1, pt = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    m: u32,
    pr: f64,
    slots: u64,
    seed: u64,
    warmup: Option<u64>,
    replications: u32,
    pt: f64,
) -> PyResult<PySimStats> {
    let config = sim_config(m, pr, slots, seed, warmup, replications, pt);
    let stats = py.detach(|| simulator::run(&config)).map_err(sim_err)?;
    Ok(PySimStats { inner: stats })
}

/// First `limit` slot outcomes as `(kind, value)` tuples: `("idle", None)`,
/// `("success", user)`, `("collision", transmitters)`.
#[pyfunction]
#[pyo3(signature = (m, pr, limit, seed = 1))]
fn trace(m: u32, pr: f64, limit: u64, seed: u64) -> PyResult<Vec<(&'static str, Option<usize>)>> {
    let config = SimConfig::new(m, pr, limit.max(1), seed);
    let outcomes = simulator::trace(&config, limit).map_err(sim_err)?;
    Ok(outcomes
        .into_iter()
        .map(|o| match o {
            simulator::SlotOutcome::Idle => ("idle", None),
            simulator::SlotOutcome::Success(u) => ("success", Some(u)),
            simulator::SlotOutcome::Collision(n) => ("collision", Some(n)),
        })
        .collect())
}

/// Analytic sweep. `kind` is `"throughput-vs-pr"` (values are pr),
/// `"throughput-vs-users"` or `"delay"` (values are occupancies).
#[pyfunction]
fn sweep<'py>(
    py: Python<'py>,
    kind: &str,
    users: Vec<u32>,
    values: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = match kind {
        "throughput-vs-pr" => SweepSpec::throughput_vs_pr(users, values),
        "throughput-vs-users" => SweepSpec::throughput_vs_users(values, users),
        "delay" => SweepSpec::delay_vs_users(values, users),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown sweep kind {other:?}"
            )))
        }
    };
    let rows = py
        .detach(|| experiments::sweep(&spec))
        .map_err(experiment_err)?;
    to_py(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (users, prs, slots = 1_000_000, seed = 1, warmup = None, replications = 1))]
fn validate<'py>(
    py: Python<'py>,
    users: Vec<u32>,
    prs: Vec<f64>,
    slots: u64,
    seed: u64,
    warmup: Option<u64>,
    replications: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let template = sim_config(1, 0.5, slots, seed, warmup, replications, 1.0);
    let spec = SweepSpec::validation(users, prs, template);
    let report = py
        .detach(|| experiments::validate(&spec))
        .map_err(experiment_err)?;
    to_py(py, &report)
}

#[pymodule]
fn contention_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("ModelError", py.get_type::<ModelError>())?;
    m.add(
        "DegenerateChainError",
        py.get_type::<DegenerateChainError>(),
    )?;
    m.add("UnboundedError", py.get_type::<UnboundedError>())?;
    m.add("SimulationError", py.get_type::<SimulationError>())?;
    m.add("NotSupportedError", py.get_type::<NotSupportedError>())?;
    m.add_class::<PyChain>()?;
    m.add_class::<PySimStats>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(transition_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(stationary, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_linear_solve, m)?)?;
    m.add_function(wrap_pyfunction!(throughput, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_throughput_limit, m)?)?;
    m.add_function(wrap_pyfunction!(occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(pr_from_occupancy, m)?)?;
    m.add_function(wrap_pyfunction!(q_mean, m)?)?;
    m.add_function(wrap_pyfunction!(delay, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
