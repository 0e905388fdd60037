use alloc::format;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Optimization settings shared by pretraining and predictor training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Predictor epochs.
    pub epochs: usize,
    /// Autoencoder epochs, run before the predictor epochs.
    pub pretrain_epochs: usize,
    pub seed: u64,
    /// Global gradient-norm ceiling; `0` disables clipping.
    pub clip_norm: f64,
    /// Keep updating the encoder while training the predictor.
    pub fine_tune_encoder: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 100,
            pretrain_epochs: 100,
            seed: 0,
            clip_norm: 5.0,
            fine_tune_encoder: true,
        }
    }
}

impl TrainConfig {
    /// A zero learning rate is accepted as a frozen run.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate {} must be finite and >= 0",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.epochs == 0 || self.pretrain_epochs == 0 {
            return Err(Error::config("epoch counts must be at least 1"));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            return Err(Error::config(format!(
                "clip norm {} must be finite and >= 0",
                self.clip_norm
            )));
        }
        Ok(())
    }
}
