//! Training configuration file (TOML).
//!
//! ```toml
//! seed = 0
//! epochs = 2000
//! batch_size = 64
//! r = 2
//! eps = 1e-6
//! tune_fraction = 0.2
//!
//! [optimizer]
//! kind = "adam"
//! learning_rate = 0.01
//!
//! [[view]]
//! hidden = [10, 10, 10]
//! output = 2
//! activation = "sigmoid"
//! ```
//!
//! Input widths come from the data. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use dgcca_core::{Activation, OptimizerConfig, OptimizerKind, TrainConfig, ViewConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub r: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub tune_fraction: f64,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
    #[serde(default)]
    pub full_pass_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub l1: f64,
    #[serde(default)]
    pub l2: f64,
    pub optimizer: OptimizerSection,
    #[serde(rename = "view")]
    pub views: Vec<ViewSection>,
}

fn default_eps() -> f64 {
    1e-6
}

fn default_shuffle() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSection {
    #[serde(default)]
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: Activation,
}

impl OptimizerSection {
    fn resolve(&self) -> CliResult<OptimizerConfig> {
        let misplaced = |key: &str| CliError::Config(format!("optimizer.{key} does not apply to kind {:?}", self.kind));
        let mut cfg = match self.kind {
            OptimizerKind::Sgd => OptimizerConfig::sgd(self.learning_rate),
            OptimizerKind::SgdMomentum => {
                OptimizerConfig::sgd_momentum(self.learning_rate, self.momentum.unwrap_or(0.9))
            }
            OptimizerKind::Adam => OptimizerConfig::adam(self.learning_rate),
        };
        if self.momentum.is_some() && self.kind != OptimizerKind::SgdMomentum {
            return Err(misplaced("momentum"));
        }
        for (key, value, slot) in [
            ("beta1", self.beta1, &mut cfg.beta1),
            ("beta2", self.beta2, &mut cfg.beta2),
            ("epsilon", self.epsilon, &mut cfg.epsilon),
        ] {
            if let Some(v) = value {
                if self.kind != OptimizerKind::Adam {
                    return Err(misplaced(key));
                }
                *slot = v;
            }
        }
        cfg.validate().map_err(|e| CliError::Config(format!("optimizer: {e}")))?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Full training configuration for data with the given per-view input
    /// widths.
    pub fn resolve(&self, input_dims: &[usize]) -> CliResult<TrainConfig> {
        if self.views.len() != input_dims.len() {
            return Err(CliError::Config(format!(
                "config has {} [[view]] sections, data has {} views",
                self.views.len(),
                input_dims.len()
            )));
        }
        let views = self
            .views
            .iter()
            .zip(input_dims)
            .map(|(v, &d)| ViewConfig {
                widths: std::iter::once(d).chain(v.hidden.iter().copied()).chain([v.output]).collect(),
                activation: v.activation,
            })
            .collect();
        let cfg = TrainConfig {
            views,
            r: self.r,
            eps: self.eps,
            view_weights: self.view_weights.clone(),
            optimizer: self.optimizer.resolve()?,
            l1: self.l1,
            l2: self.l2,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            tune_fraction: self.tune_fraction,
            shuffle: self.shuffle,
            full_pass_every: self.full_pass_every,
        };
        cfg.validate(Some(input_dims)).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}
