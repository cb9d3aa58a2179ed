use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::bandit::BanditState;
use crate::error::{invalid, Result};
use crate::optim::{ModelParams, OptimizerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunMode {
    Rmgd,
    Mgd { batch_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestModel {
    pub epoch: Option<usize>,
    /// Infinite until the first epoch finishes; JSON stores that as `null`.
    #[serde(deserialize_with = "null_as_infinity")]
    pub val_loss: f64,
    pub params: ModelParams,
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Everything needed to continue a run after `epoch` completed epochs.
///
/// Shuffles are keyed by `(seed, epoch)` and the bandit restores its
/// generator from `draw_count`, so these two fields are the only random
/// cursors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub mode: RunMode,
    pub seed: u64,
    pub epoch: usize,
    pub params: ModelParams,
    pub optimizer_state: OptimizerState,
    pub bandit_state: Option<BanditState>,
    pub initial_val_loss: f64,
    pub prev_val_loss: f64,
    pub cumulative_iterations: u64,
    pub last_arm: Option<usize>,
    pub best: BestModel,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub(super) fn check_against(&self, config: &RunConfig) -> Result<()> {
        if self.seed != config.seed {
            return Err(invalid(format!(
                "checkpoint seed {} differs from configured seed {}",
                self.seed, config.seed
            )));
        }
        if self.epoch > config.epochs {
            return Err(invalid(format!(
                "checkpoint is at epoch {} beyond the configured {} epochs",
                self.epoch, config.epochs
            )));
        }
        if self.params.layout != config.model.layout() {
            return Err(invalid("checkpoint parameters do not match the configured model"));
        }
        match (&self.mode, &self.bandit_state) {
            (RunMode::Rmgd, Some(b)) if b.arms() == &config.arms => Ok(()),
            (RunMode::Rmgd, Some(_)) => Err(invalid("checkpoint arm set differs from the configuration")),
            (RunMode::Rmgd, None) => Err(invalid("checkpoint of a bandit run lacks a bandit state")),
            (RunMode::Mgd { .. }, _) => Ok(()),
        }
    }
}
