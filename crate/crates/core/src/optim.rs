//! Penalized empirical risk minimization with Adam.
//!
//! Each step follows `loss gradient + penalty subgradient` on a shuffled minibatch. After
//! every epoch the monitored objective is evaluated on the full training set; training stops
//! after `patience` epochs without improvement (or at `max_epochs`) and the best checkpoint
//! is returned.

use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::net::{Architecture, LossKind, Network, Workspace};
use crate::penalty::{add_penalty_subgradient, penalty_value, PenaltyParams};
use crate::seeds::{stream_seed, StreamTag};

/// Quantity watched by early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Monitor {
    /// Unpenalized mean training loss.
    #[default]
    TrainingLoss,
    /// Mean training loss plus the penalty value.
    PenalizedObjective,
}

impl FromStr for Monitor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training_loss" | "train_loss" => Ok(Monitor::TrainingLoss),
            "penalized_objective" => Ok(Monitor::PenalizedObjective),
            other => Err(Error::Parse(format!("unknown monitor '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Epochs without improvement tolerated before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub loss: LossKind,
    pub penalty: PenaltyParams,
    /// Model seed; weight initialization and shuffling use the `init` and `shuffle`
    /// streams derived from it.
    pub seed: u64,
    pub monitor: Monitor,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            patience: 30,
            max_epochs: 1000,
            loss: LossKind::Square,
            penalty: PenaltyParams::none(),
            seed: 0,
            monitor: Monitor::TrainingLoss,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.patience == 0 {
            return bad("patience must be >= 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1");
        }
        Ok(())
    }

    pub fn with_penalty(mut self, penalty: PenaltyParams) -> Self {
        self.penalty = penalty;
        self
    }
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::LengthMismatch {
                what: "adam step",
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grad.len()
                },
            });
        }
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let lr = cfg.learning_rate;
        let eps = cfg.epsilon;
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            let denom = v_hat.sqrt() + eps;
            if denom > 0.0 {
                *p -= lr * m_hat / denom;
            }
        }
        Ok(())
    }
}

/// Patience-based stopping rule over a sequence of per-epoch values.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            stale: 0,
        }
    }

    /// Records the value of `epoch`; improvement means strictly below the best so far.
    pub fn observe(&mut self, epoch: usize, value: f64) -> Observation {
        let improved = value < self.best;
        if improved {
            self.best = value;
            self.best_epoch = Some(epoch);
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        Observation {
            improved,
            stop: self.stale >= self.patience,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Unpenalized mean training loss after the epoch.
    pub train_loss: f64,
    pub penalty_value: f64,
    /// True when this epoch set a new best monitored value (and became the checkpoint).
    pub best: bool,
}

impl EpochRecord {
    pub fn objective(&self) -> f64 {
        self.train_loss + self.penalty_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub init_scheme: &'static str,
    pub monitor: Monitor,
}

impl TrainingHistory {
    pub fn epochs(&self) -> usize {
        self.records.len()
    }

    pub fn best_record(&self) -> &EpochRecord {
        &self.records[self.best_epoch - 1]
    }

    /// Comma-separated table: `epoch,train_loss,penalty_value,monitored_best_flag`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "train_loss", "penalty_value", "monitored_best_flag"])?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.penalty_value.to_string(),
                u8::from(r.best).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits a network of shape `arch` to `data` by penalized ERM.
pub fn train(
    data: &Dataset,
    cfg: &TrainConfig,
    arch: &Architecture,
) -> Result<(Network, TrainingHistory)> {
    train_observed(data, cfg, arch, |_, _| {})
}

/// [`train`] with a callback invoked after every epoch with the epoch record and the
/// current (not necessarily best) network.
pub fn train_observed<F>(
    data: &Dataset,
    cfg: &TrainConfig,
    arch: &Architecture,
    mut observer: F,
) -> Result<(Network, TrainingHistory)>
where
    F: FnMut(&EpochRecord, &Network),
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if arch.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            layer: "layer 1 input".into(),
            expected: arch.input_dim(),
            got: data.dim(),
        });
    }
    cfg.loss.check_targets(data.targets())?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, StreamTag::Init));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, StreamTag::Shuffle));

    let mut net = Network::he_uniform(arch.clone(), &mut init_rng);
    let n_params = net.param_count();
    let mut adam = AdamState::new(n_params);
    let mut grad = vec![0.0; n_params];
    let mut ws = Workspace::default();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut xb = Vec::with_capacity(cfg.batch_size * data.dim());
    let mut yb = Vec::with_capacity(cfg.batch_size);

    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_params = net.flatten().to_vec();
    let mut records = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            data.gather_into(batch, &mut xb, &mut yb);
            let loss = net.loss_and_gradient_into(&xb, &yb, cfg.loss, &mut ws, &mut grad)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            add_penalty_subgradient(net.flatten(), &cfg.penalty, &mut grad);
            adam.step(net.params_mut(), &grad, cfg)?;
        }

        let train_loss = net.mean_loss(data.features(), data.targets(), cfg.loss)?;
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let pen = penalty_value(net.flatten(), &cfg.penalty);
        let monitored = match cfg.monitor {
            Monitor::TrainingLoss => train_loss,
            Monitor::PenalizedObjective => train_loss + pen,
        };
        let obs = stopper.observe(epoch, monitored);
        if obs.improved {
            best_params.copy_from_slice(net.flatten());
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            penalty_value: pen,
            best: obs.improved,
        };
        observer(&record, &net);
        records.push(record);
        if obs.stop {
            stopped_early = true;
            break;
        }
    }

    let best_epoch = stopper.best_epoch().unwrap_or(1);
    let best = Network::from_flat(arch.clone(), best_params)?;
    Ok((
        best,
        TrainingHistory {
            records,
            best_epoch,
            stopped_early,
            init_scheme: "he-uniform",
            monitor: cfg.monitor,
        },
    ))
}
