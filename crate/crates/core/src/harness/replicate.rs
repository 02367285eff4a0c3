//! Monte-Carlo replication of the SPDNN vs. NPDNN comparison.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dgp::{simulate_with, DgpKind, SimulationConfig, Task, Trajectory};
use crate::error::{Error, Result};
use crate::harness::evaluate::{evaluate_excess_risk, evaluate_l2, evaluate_test_mse, LagView, Predictor};
use crate::harness::grid::{design, grid_search, GridPoint, GridSpec};
use crate::net::{Architecture, LossKind, Network};
use crate::optim::{train, TrainConfig};
use crate::penalty::{effective_l0, PenaltyParams, EFFECTIVE_SPARSITY_TOL};
use crate::seeds::{replication_seed, stream_seed, StreamTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Spdnn,
    Npdnn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spdnn => "SPDNN",
            Method::Npdnn => "NPDNN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SPDNN" => Ok(Method::Spdnn),
            "NPDNN" => Ok(Method::Npdnn),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

/// Error reported for regression processes. Binary processes always use excess risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    /// Empirical squared distance to the true regression function.
    #[default]
    TrueFunction,
    /// Test mean squared error against the noisy targets.
    Targets,
}

impl FromStr for ErrorMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true_function" | "l2" => Ok(ErrorMetric::TrueFunction),
            "targets" | "mse" => Ok(ErrorMetric::Targets),
            other => Err(Error::Parse(format!("unknown metric '{other}'"))),
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub dgp: DgpKind,
    pub n: usize,
    pub replication: usize,
    pub method: Method,
    /// Selected grid point; `None` for NPDNN.
    pub chosen: Option<GridPoint>,
    pub error: f64,
    /// Parameters with `|theta_j| > 1e-6`.
    pub sparsity: usize,
    /// Replication seed every stream of this replication derives from.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationConfig {
    pub dgp: DgpKind,
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    /// Length of the test trajectory.
    pub test_size: usize,
    pub grid_i: Vec<u32>,
    pub grid_j: Vec<u32>,
    pub hidden_widths: Vec<usize>,
    /// Response lags fed to the network; `None` uses all lags of the process.
    pub input_lags: Option<usize>,
    /// Optimizer settings; `loss`, `penalty` and `seed` are set per run.
    pub train: TrainConfig,
    pub simulation: SimulationConfig,
    pub metric: ErrorMetric,
}

impl ReplicationConfig {
    pub fn new(dgp: DgpKind, n: usize, reps: usize, base_seed: u64) -> Self {
        Self {
            dgp,
            n,
            reps,
            base_seed,
            test_size: 10_000,
            grid_i: (0..=10).collect(),
            grid_j: (0..=10).collect(),
            hidden_widths: vec![100, 100],
            input_lags: None,
            train: TrainConfig::default(),
            simulation: SimulationConfig::default(),
            metric: ErrorMetric::TrueFunction,
        }
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let d = match self.input_lags {
            Some(q) if q >= 1 && q <= self.dgp.lag_order() => q + 1,
            Some(q) => {
                return Err(Error::InvalidConfig(format!(
                    "{} supports 1..={} input lags, got {q}",
                    self.dgp,
                    self.dgp.lag_order()
                )))
            }
            None => self.dgp.feature_dim(),
        };
        Architecture::new(d, self.hidden_widths.clone())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_i.clone(), self.grid_j.clone(), self.n)
    }

    pub fn loss(&self) -> LossKind {
        match self.dgp.task() {
            Task::Regression => LossKind::Square,
            Task::Binary => LossKind::Hinge,
        }
    }

    /// Training configuration of replication `r` with the given penalty.
    pub fn train_config(&self, rep_seed: u64, penalty: PenaltyParams) -> TrainConfig {
        TrainConfig {
            loss: self.loss(),
            penalty,
            seed: rep_seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.test_size == 0 || self.reps == 0 {
            return Err(Error::InvalidConfig(
                "need n >= 2, test_size >= 1 and reps >= 1".into(),
            ));
        }
        self.architecture()?;
        self.grid()?;
        self.train.validate()
    }
}

/// Simulated train / validation / test trajectories of replication `r`.
pub fn replication_data(
    cfg: &ReplicationConfig,
    replication: usize,
) -> Result<(u64, Trajectory, Trajectory, Trajectory)> {
    let seed = replication_seed(cfg.base_seed, replication as u64);
    let sim = |len, tag| simulate_with(cfg.dgp, len, stream_seed(seed, tag), &cfg.simulation);
    Ok((
        seed,
        sim(cfg.n, StreamTag::Train)?,
        sim(cfg.n, StreamTag::Valid)?,
        sim(cfg.test_size, StreamTag::Test)?,
    ))
}

/// Test error of `net` under the configured metric.
pub fn test_error(cfg: &ReplicationConfig, net: &Network, test: &Trajectory) -> Result<f64> {
    let lags = net.architecture().input_dim() - 1;
    let view;
    let pred: &dyn Predictor = if lags == cfg.dgp.lag_order() {
        net
    } else {
        view = LagView {
            inner: net,
            lags,
            kind: cfg.dgp,
        };
        &view
    };
    match (cfg.dgp.task(), cfg.metric) {
        (Task::Binary, _) => evaluate_excess_risk(pred, test, cfg.dgp),
        (Task::Regression, ErrorMetric::TrueFunction) => evaluate_l2(pred, test, cfg.dgp),
        (Task::Regression, ErrorMetric::Targets) => evaluate_test_mse(pred, test, cfg.dgp),
    }
}

/// The SPDNN and NPDNN records of replication `r`.
pub fn run_replication(cfg: &ReplicationConfig, replication: usize) -> Result<[ExperimentResult; 2]> {
    let arch = cfg.architecture()?;
    let grid = cfg.grid()?;
    let (seed, train_traj, valid_traj, test_traj) = replication_data(cfg, replication)?;

    let base = cfg.train_config(seed, PenaltyParams::none());
    let searched = grid_search(&train_traj, &valid_traj, &grid, &base, &arch)?;
    let sp_error = test_error(cfg, &searched.best_net, &test_traj)?;

    let (np_net, _) = train(&design(&train_traj, &arch)?, &base, &arch)?;
    let np_error = test_error(cfg, &np_net, &test_traj)?;

    let record = |method, chosen, error, net: &Network| ExperimentResult {
        dgp: cfg.dgp,
        n: cfg.n,
        replication,
        method,
        chosen,
        error,
        sparsity: effective_l0(net.flatten(), EFFECTIVE_SPARSITY_TOL),
        seed,
    };
    Ok([
        record(Method::Spdnn, Some(searched.best), sp_error, &searched.best_net),
        record(Method::Npdnn, None, np_error, &np_net),
    ])
}

/// Runs `cfg.reps` replications. Failed replications are logged and skipped; the run fails
/// when more than 10% of them fail. Records are sorted by `(replication, method)`.
pub fn replicate(cfg: &ReplicationConfig) -> Result<Vec<ExperimentResult>> {
    cfg.validate()?;
    let outcomes: Vec<(usize, Result<[ExperimentResult; 2]>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| (r, run_replication(cfg, r)))
        .collect();

    let mut results = Vec::with_capacity(2 * cfg.reps);
    let mut failed = 0;
    for (r, outcome) in outcomes {
        match outcome {
            Ok(pair) => results.extend(pair),
            Err(e) => {
                log::warn!("{} n={} replication {r} failed: {e}", cfg.dgp, cfg.n);
                failed += 1;
            }
        }
    }
    if failed * 10 > cfg.reps {
        return Err(Error::TooManyFailures {
            failed,
            total: cfg.reps,
        });
    }
    results.sort_by_key(|rec| (rec.replication, rec.method));
    Ok(results)
}
