//! Plain-text experiment configuration.
//!
//! The file is a flat list of `key = value` lines (TOML syntax, no tables). Every key is
//! optional and unknown keys are rejected:
//!
//! ```text
//! dgp = "DGP1"            # DGP1..DGP4
//! n = 500                 # training and validation length
//! reps = 20
//! base_seed = 42
//! test_size = 10000
//! grid_i = [0, 3, 6, 9]   # lambda(i) = 10^-i log(n)/n
//! grid_j = [0, 3, 6, 9]   # tau(j) = 10^-j / log(n)
//! hidden_widths = [100, 100]
//! input_lags = 1          # response lags fed to the network; omit for all
//! learning_rate = 0.001
//! batch_size = 32
//! patience = 30
//! max_epochs = 1000
//! monitor = "training_loss"   # or "penalized_objective"
//! metric = "true_function"    # or "targets"
//! burn_in = 1000
//! exog_phi = 0.5
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::dgp::DgpKind;
use crate::error::{Error, Result};
use crate::harness::replicate::{ErrorMetric, ReplicationConfig};
use crate::optim::Monitor;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dgp: Option<String>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub base_seed: Option<u64>,
    pub test_size: Option<usize>,
    pub grid_i: Option<Vec<u32>>,
    pub grid_j: Option<Vec<u32>>,
    pub hidden_widths: Option<Vec<usize>>,
    pub input_lags: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub max_epochs: Option<usize>,
    pub monitor: Option<String>,
    pub metric: Option<String>,
    pub burn_in: Option<usize>,
    pub exog_phi: Option<f64>,
}

macro_rules! overlay {
    ($self:ident, $other:ident; $($field:ident),*) => {
        $( if $other.$field.is_some() { $self.$field = $other.$field.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Values set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ExperimentConfig) {
        overlay!(self, other; dgp, n, reps, base_seed, test_size, grid_i, grid_j, hidden_widths,
            input_lags, learning_rate, batch_size, patience, max_epochs, monitor, metric,
            burn_in, exog_phi);
    }

    pub fn dgp_kind(&self) -> Result<Option<DgpKind>> {
        self.dgp.as_deref().map(str::parse).transpose()
    }

    /// Builds a replication config; `dgp` and `n` are required, `reps` defaults to 20 and
    /// `base_seed` to 0.
    pub fn to_replication_config(&self) -> Result<ReplicationConfig> {
        let dgp = self
            .dgp_kind()?
            .ok_or_else(|| Error::InvalidConfig("missing 'dgp'".into()))?;
        let n = self
            .n
            .ok_or_else(|| Error::InvalidConfig("missing 'n'".into()))?;
        let mut cfg = ReplicationConfig::new(dgp, n, self.reps.unwrap_or(20), self.base_seed.unwrap_or(0));
        self.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Writes every field that is set into `cfg`, leaving the rest untouched.
    pub fn apply(&self, cfg: &mut ReplicationConfig) -> Result<()> {
        if let Some(kind) = self.dgp_kind()? {
            cfg.dgp = kind;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.base_seed {
            cfg.base_seed = v;
        }
        if let Some(v) = self.test_size {
            cfg.test_size = v;
        }
        if let Some(v) = &self.grid_i {
            cfg.grid_i = v.clone();
        }
        if let Some(v) = &self.grid_j {
            cfg.grid_j = v.clone();
        }
        if let Some(v) = &self.hidden_widths {
            cfg.hidden_widths = v.clone();
        }
        if self.input_lags.is_some() {
            cfg.input_lags = self.input_lags;
        }
        if let Some(v) = self.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.patience {
            cfg.train.patience = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.train.max_epochs = v;
        }
        if let Some(m) = &self.monitor {
            cfg.train.monitor = m.parse::<Monitor>()?;
        }
        if let Some(m) = &self.metric {
            cfg.metric = m.parse::<ErrorMetric>()?;
        }
        if let Some(v) = self.burn_in {
            cfg.simulation.burn_in = v;
        }
        if let Some(v) = self.exog_phi {
            cfg.simulation.exog_phi = v;
        }
        Ok(())
    }
}
