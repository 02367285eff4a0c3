//! Validation grid search over `lambda(i) = 10^-i log(n)/n`, `tau(j) = 10^-j / log(n)`.

use std::io::Write;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::dgp::Trajectory;
use crate::error::{Error, Result};
use crate::net::{Architecture, Network};
use crate::optim::{train, TrainConfig, TrainingHistory};
use crate::penalty::{effective_l0, PenaltyParams, EFFECTIVE_SPARSITY_TOL};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    i_values: Vec<u32>,
    j_values: Vec<u32>,
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub i: u32,
    pub j: u32,
}

impl GridSpec {
    pub fn new(i_values: Vec<u32>, j_values: Vec<u32>, n: usize) -> Result<Self> {
        if i_values.is_empty() || j_values.is_empty() {
            return Err(Error::InvalidConfig("grid index ranges must be nonempty".into()));
        }
        if n < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid needs n >= 2 so that log(n) > 0, got {n}"
            )));
        }
        Ok(Self {
            i_values,
            j_values,
            n,
        })
    }

    /// The full 11 x 11 grid, `i, j = 0, 1, ..., 10`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new((0..=10).collect(), (0..=10).collect(), n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn i_values(&self) -> &[u32] {
        &self.i_values
    }

    pub fn j_values(&self) -> &[u32] {
        &self.j_values
    }

    /// `10^-i log(n) / n`.
    pub fn lambda(&self, i: u32) -> f64 {
        let n = self.n as f64;
        10f64.powi(-(i as i32)) * n.ln() / n
    }

    /// `10^-j / log(n)`.
    pub fn tau(&self, j: u32) -> f64 {
        10f64.powi(-(j as i32)) / (self.n as f64).ln()
    }

    pub fn penalty(&self, p: GridPoint) -> PenaltyParams {
        PenaltyParams::new(self.lambda(p.i), self.tau(p.j))
            .expect("grid values are positive and finite")
    }

    pub fn len(&self) -> usize {
        self.i_values.len() * self.j_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major `(i, j)` order.
    pub fn points(&self) -> Vec<GridPoint> {
        self.i_values
            .iter()
            .flat_map(|&i| self.j_values.iter().map(move |&j| GridPoint { i, j }))
            .collect()
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        self.i_values.contains(&p.i) && self.j_values.contains(&p.j)
    }
}

/// One trained grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    pub lambda: f64,
    pub tau: f64,
    /// Unpenalized validation loss.
    pub score: f64,
    /// Parameters with `|theta_j| > 1e-6`.
    pub sparsity: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best_net: Network,
    pub best: GridPoint,
    pub best_history: TrainingHistory,
    pub table: Vec<GridRow>,
    /// Points whose training failed, with the error message.
    pub skipped: Vec<(GridPoint, String)>,
}

impl GridSearchOutcome {
    pub fn best_row(&self) -> &GridRow {
        self.table
            .iter()
            .find(|r| r.point == self.best)
            .expect("best point is in the table")
    }
}

/// Index of the row with the smallest score; ties go to the larger `i`, then larger `j`.
pub fn select_best(rows: &[GridRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.score.is_finite())
        .min_by(|(_, a), (_, b)| {
            a.score
                .total_cmp(&b.score)
                .then(b.point.i.cmp(&a.point.i))
                .then(b.point.j.cmp(&a.point.j))
        })
        .map(|(k, _)| k)
}

/// The training design matching `arch`: all lags when the input dimension equals the
/// trajectory's feature dimension, otherwise the first `input_dim - 1` lags.
pub fn design(traj: &Trajectory, arch: &Architecture) -> Result<Dataset> {
    let d = arch.input_dim();
    if d == traj.feature_dim() {
        Ok(traj.to_dataset())
    } else if d >= 2 && d < traj.feature_dim() {
        traj.dataset_with_lags(d - 1)
    } else {
        Err(Error::DimensionMismatch {
            layer: "layer 1 input".into(),
            expected: traj.feature_dim(),
            got: d,
        })
    }
}

/// Trains one network per grid point (all with the same model seed), scores each on the
/// validation trajectory with the unpenalized training loss and returns the minimizer.
pub fn grid_search(
    train_traj: &Trajectory,
    valid_traj: &Trajectory,
    grid: &GridSpec,
    cfg: &TrainConfig,
    arch: &Architecture,
) -> Result<GridSearchOutcome> {
    if train_traj.kind() != valid_traj.kind() {
        return Err(Error::InvalidConfig(format!(
            "training trajectory is {} but validation trajectory is {}",
            train_traj.kind(),
            valid_traj.kind()
        )));
    }
    let train_set = design(train_traj, arch)?;
    let valid_set = design(valid_traj, arch)?;

    let outcomes: Vec<(GridPoint, Result<(Network, TrainingHistory, GridRow)>)> = grid
        .points()
        .into_par_iter()
        .map(|point| {
            let penalty = grid.penalty(point);
            let run = || -> Result<(Network, TrainingHistory, GridRow)> {
                let point_cfg = cfg.clone().with_penalty(penalty);
                let (net, history) = train(&train_set, &point_cfg, arch)?;
                let score = net.mean_loss(valid_set.features(), valid_set.targets(), cfg.loss)?;
                let row = GridRow {
                    point,
                    lambda: penalty.lambda(),
                    tau: penalty.tau(),
                    score,
                    sparsity: effective_l0(net.flatten(), EFFECTIVE_SPARSITY_TOL),
                    epochs: history.epochs(),
                };
                Ok((net, history, row))
            };
            (point, run())
        })
        .collect();

    let mut table = Vec::with_capacity(outcomes.len());
    let mut fits = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    for (point, outcome) in outcomes {
        match outcome {
            Ok((net, history, row)) => {
                table.push(row);
                fits.push((net, history));
            }
            Err(e) => {
                log::warn!("grid point (i={}, j={}) skipped: {e}", point.i, point.j);
                skipped.push((point, e.to_string()));
            }
        }
    }
    let k = select_best(&table).ok_or(Error::AllGridPointsFailed)?;
    let best = table[k].point;
    let (best_net, best_history) = fits.swap_remove(k);
    Ok(GridSearchOutcome {
        best_net,
        best,
        best_history,
        table,
        skipped,
    })
}

/// Comma-separated grid table: `i,j,lambda,tau,score,sparsity,epochs`.
pub fn write_grid_table<W: Write>(rows: &[GridRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "j", "lambda", "tau", "score", "sparsity", "epochs"])?;
    for r in rows {
        w.write_record([
            r.point.i.to_string(),
            r.point.j.to_string(),
            r.lambda.to_string(),
            r.tau.to_string(),
            r.score.to_string(),
            r.sparsity.to_string(),
            r.epochs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
