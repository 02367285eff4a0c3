//! Python bindings: simulation, training, evaluation, the replication harness and the
//! theory calculators.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spdnn_core as core;
use spdnn_core::harness::grid::design;
use spdnn_core::harness::{self, ReplicationConfig};
use spdnn_core::penalty::{self, PenaltyParams};
use spdnn_core::theory::{self, BoundConstants, CoveringArgs, RateTask, ScheduleExponents};
use spdnn_core::{DgpKind, LossKind, SimulationConfig};

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn dgp(name: &str) -> PyResult<DgpKind> {
    name.parse().map_err(err)
}

fn flatten_rows(rows: &[Vec<f64>], dim: usize) -> PyResult<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * dim);
    for (k, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(PyValueError::new_err(format!(
                "row {k} has length {}, expected {dim}",
                r.len()
            )));
        }
        out.extend_from_slice(r);
    }
    Ok(out)
}

/// A simulated sample `(X_t, Y_t)`.
#[pyclass(name = "Trajectory", module = "spdnn", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    inner: core::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn dgp(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn targets(&self) -> Vec<f64> {
        self.inner.targets().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(dgp={}, len={}, seed={})",
            self.inner.kind(),
            self.inner.len(),
            self.inner.seed()
        )
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        core::Trajectory::load(path)
            .map(|inner| Self { inner })
            .map_err(err)
    }
}

/// ReLU network with a linear output layer.
#[pyclass(name = "Network", module = "spdnn", skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: core::Network,
}

#[pymethods]
impl PyNetwork {
    /// All-zero network, or one with the given flat parameters.
    #[new]
    #[pyo3(signature = (input_dim, hidden_widths, params=None, output_clamp=f64::INFINITY))]
    fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        params: Option<Vec<f64>>,
        output_clamp: f64,
    ) -> PyResult<Self> {
        let arch = core::Architecture::new(input_dim, hidden_widths)
            .and_then(|a| a.with_output_clamp(output_clamp))
            .map_err(err)?;
        let inner = match params {
            Some(p) => core::Network::from_flat(arch, p).map_err(err)?,
            None => core::Network::zeros(arch),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.architecture().input_dim()
    }

    #[getter]
    fn hidden_widths(&self) -> Vec<usize> {
        self.inner.architecture().hidden_widths().to_vec()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.flatten().to_vec()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.forward(&x).map_err(err)
    }

    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let xs = flatten_rows(&rows, self.input_dim())?;
        self.inner.predict_rows(&xs).map_err(err)
    }

    /// Mean loss (`"square"` or `"hinge"`) over a batch.
    #[pyo3(signature = (rows, targets, loss="square"))]
    fn mean_loss(&self, rows: Vec<Vec<f64>>, targets: Vec<f64>, loss: &str) -> PyResult<f64> {
        let loss: LossKind = loss.parse().map_err(err)?;
        let xs = flatten_rows(&rows, self.input_dim())?;
        self.inner.mean_loss(&xs, &targets, loss).map_err(err)
    }

    /// `(mean loss, gradient)` with the gradient aligned with `params`.
    #[pyo3(signature = (rows, targets, loss="square"))]
    fn loss_and_gradient(
        &self,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
        loss: &str,
    ) -> PyResult<(f64, Vec<f64>)> {
        let loss: LossKind = loss.parse().map_err(err)?;
        let xs = flatten_rows(&rows, self.input_dim())?;
        self.inner.loss_and_gradient(&xs, &targets, loss).map_err(err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        core::Network::from_text(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        core::Network::load(path)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(input_dim={}, hidden_widths={:?}, params={})",
            self.input_dim(),
            self.hidden_widths(),
            self.param_count()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (dgp_name, n, seed=0, burn_in=1000, exog_phi=0.5))]
fn simulate(dgp_name: &str, n: usize, seed: u64, burn_in: usize, exog_phi: f64) -> PyResult<PyTrajectory> {
    let cfg = SimulationConfig {
        burn_in,
        exog_phi,
        ..SimulationConfig::default()
    };
    core::dgp::simulate_with(dgp(dgp_name)?, n, seed, &cfg)
        .map(|inner| PyTrajectory { inner })
        .map_err(err)
}

#[pyfunction]
fn mean_function(dgp_name: &str, x: Vec<f64>) -> PyResult<f64> {
    core::dgp::mean_function(dgp(dgp_name)?, &x).map_err(err)
}

#[pyfunction]
fn bayes_classifier(dgp_name: &str, x: Vec<f64>) -> PyResult<f64> {
    core::dgp::bayes_classifier(dgp(dgp_name)?, &x).map_err(err)
}

#[pyfunction]
fn clipped_norm(theta: Vec<f64>, tau: f64) -> PyResult<f64> {
    penalty::clipped_norm(&theta, tau).map_err(err)
}

#[pyfunction]
fn penalty_value(theta: Vec<f64>, lam: f64, tau: f64) -> PyResult<f64> {
    Ok(penalty::penalty_value(&theta, &PenaltyParams::new(lam, tau).map_err(err)?))
}

#[pyfunction]
fn penalty_subgradient(theta: Vec<f64>, lam: f64, tau: f64) -> PyResult<Vec<f64>> {
    Ok(penalty::penalty_subgradient(&theta, &PenaltyParams::new(lam, tau).map_err(err)?))
}

#[pyfunction]
fn l0_norm(theta: Vec<f64>) -> usize {
    penalty::l0_norm(&theta)
}

#[pyfunction]
#[pyo3(signature = (theta, eps=penalty::EFFECTIVE_SPARSITY_TOL))]
fn effective_l0(theta: Vec<f64>, eps: f64) -> usize {
    penalty::effective_l0(&theta, eps)
}

fn replication_config(
    dgp_name: &str,
    n: usize,
    reps: usize,
    seed: u64,
    hidden: Vec<usize>,
    max_epochs: usize,
    input_lags: Option<usize>,
) -> PyResult<ReplicationConfig> {
    let mut cfg = ReplicationConfig::new(dgp(dgp_name)?, n.max(2), reps, seed);
    cfg.hidden_widths = hidden;
    cfg.train.max_epochs = max_epochs;
    cfg.input_lags = input_lags;
    Ok(cfg)
}

/// Fits one network to a trajectory; returns `(network, history)` where `history` is a
/// list of per-epoch dicts.
#[pyfunction]
#[pyo3(signature = (
    traj, lam=0.0, tau=1.0, seed=0, hidden=vec![100, 100], max_epochs=1000,
    learning_rate=1e-3, batch_size=32, patience=30, input_lags=None
))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    traj: &PyTrajectory,
    lam: f64,
    tau: f64,
    seed: u64,
    hidden: Vec<usize>,
    max_epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    patience: usize,
    input_lags: Option<usize>,
) -> PyResult<(PyNetwork, Vec<Bound<'py, PyDict>>)> {
    let t = &traj.inner;
    let mut cfg = replication_config(&t.kind().to_string(), t.len(), 1, seed, hidden, max_epochs, input_lags)?;
    cfg.train.learning_rate = learning_rate;
    cfg.train.batch_size = batch_size;
    cfg.train.patience = patience;
    let arch = cfg.architecture().map_err(err)?;
    let train_cfg = cfg.train_config(seed, PenaltyParams::new(lam, tau).map_err(err)?);
    let data = design(t, &arch).map_err(err)?;
    let (net, hist) = py
        .detach(|| core::optim::train(&data, &train_cfg, &arch))
        .map_err(err)?;
    let records = hist
        .records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("epoch", r.epoch)?;
            d.set_item("train_loss", r.train_loss)?;
            d.set_item("penalty_value", r.penalty_value)?;
            d.set_item("best", r.best)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((PyNetwork { inner: net }, records))
}

/// Empirical L2 distance to the true regression function, or test MSE with `vs_targets`.
#[pyfunction]
#[pyo3(signature = (net, test, vs_targets=false))]
fn evaluate_l2(net: &PyNetwork, test: &PyTrajectory, vs_targets: bool) -> PyResult<f64> {
    let kind = test.inner.kind();
    if vs_targets {
        harness::evaluate_test_mse(&net.inner, &test.inner, kind).map_err(err)
    } else {
        harness::evaluate_l2(&net.inner, &test.inner, kind).map_err(err)
    }
}

#[pyfunction]
fn evaluate_excess_risk(net: &PyNetwork, test: &PyTrajectory) -> PyResult<f64> {
    harness::evaluate_excess_risk(&net.inner, &test.inner, test.inner.kind()).map_err(err)
}

/// SPDNN vs NPDNN over `reps` replications. Returns one dict per record and writes the
/// report files when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (
    dgp_name, n, reps=20, base_seed=0, grid_i=(0..=10).collect(), grid_j=(0..=10).collect(),
    hidden=vec![100, 100], max_epochs=1000, test_size=10_000, input_lags=None, out_dir=None
))]
#[allow(clippy::too_many_arguments)]
fn replicate<'py>(
    py: Python<'py>,
    dgp_name: &str,
    n: usize,
    reps: usize,
    base_seed: u64,
    grid_i: Vec<u32>,
    grid_j: Vec<u32>,
    hidden: Vec<usize>,
    max_epochs: usize,
    test_size: usize,
    input_lags: Option<usize>,
    out_dir: Option<String>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = replication_config(dgp_name, n, reps, base_seed, hidden, max_epochs, input_lags)?;
    cfg.n = n;
    cfg.grid_i = grid_i;
    cfg.grid_j = grid_j;
    cfg.test_size = test_size;
    let results = py.detach(|| harness::replicate(&cfg)).map_err(err)?;
    if let Some(dir) = out_dir {
        harness::write_report(&results, dir).map_err(err)?;
    }
    results
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("dgp", r.dgp.to_string())?;
            d.set_item("n", r.n)?;
            d.set_item("replication", r.replication)?;
            d.set_item("method", r.method.to_string())?;
            d.set_item("i", r.chosen.map(|p| p.i))?;
            d.set_item("j", r.chosen.map(|p| p.j))?;
            d.set_item("error", r.error)?;
            d.set_item("sparsity", r.sparsity)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect()
}

fn exponents(nu4: Option<f64>, nu6: Option<f64>, kappa: Option<f64>) -> ScheduleExponents {
    let d = ScheduleExponents::default();
    ScheduleExponents {
        nu4: nu4.unwrap_or(d.nu4),
        nu6: nu6.unwrap_or(d.nu6),
        kappa: kappa.unwrap_or(d.kappa),
        ..d
    }
}

/// Depth, width, weight bound, lambda, tau_max and beta at sample size `n`.
#[pyfunction]
#[pyo3(signature = (n, task="regression", nu4=None, nu6=None, kappa=None))]
fn schedule<'py>(
    py: Python<'py>,
    n: f64,
    task: &str,
    nu4: Option<f64>,
    nu6: Option<f64>,
    kappa: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let task: RateTask = task.parse().map_err(err)?;
    let s = theory::schedule(n, &exponents(nu4, nu6, kappa), &BoundConstants::default(), task)
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("depth", s.depth)?;
    d.set_item("width", s.width)?;
    d.set_item("weight_bound", s.weight_bound)?;
    d.set_item("lambda", s.lambda)?;
    d.set_item("tau_max", s.tau_max)?;
    d.set_item("beta", s.beta)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (n, task="regression", nu4=None, nu6=None, kappa=None))]
fn rate(n: f64, task: &str, nu4: Option<f64>, nu6: Option<f64>, kappa: Option<f64>) -> PyResult<f64> {
    let exp = exponents(nu4, nu6, kappa);
    match task.parse::<RateTask>().map_err(err)? {
        RateTask::Regression => theory::regression_rate(n, &exp),
        RateTask::Classification => theory::classification_rate(n, &exp),
    }
    .map_err(err)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn covering_bound(
    eps: f64,
    depth: f64,
    width: f64,
    weight_bound: f64,
    j: i32,
    alpha: f64,
    lam: f64,
    tau: f64,
    k: f64,
) -> PyResult<f64> {
    theory::covering_bound(&CoveringArgs {
        eps,
        depth,
        width,
        weight_bound,
        j,
        alpha,
        lambda: lam,
        tau,
        k,
    })
    .map_err(err)
}

#[pymodule]
fn spdnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(mean_function, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_classifier, m)?)?;
    m.add_function(wrap_pyfunction!(clipped_norm, m)?)?;
    m.add_function(wrap_pyfunction!(penalty_value, m)?)?;
    m.add_function(wrap_pyfunction!(penalty_subgradient, m)?)?;
    m.add_function(wrap_pyfunction!(l0_norm, m)?)?;
    m.add_function(wrap_pyfunction!(effective_l0, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_l2, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_excess_risk, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    m.add_function(wrap_pyfunction!(schedule, m)?)?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    m.add_function(wrap_pyfunction!(covering_bound, m)?)?;
    m.add("EFFECTIVE_SPARSITY_TOL", penalty::EFFECTIVE_SPARSITY_TOL)?;
    Ok(())
}
