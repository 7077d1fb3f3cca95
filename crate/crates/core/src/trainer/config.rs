use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::ndgrad::DEFAULT_EPSILON;

/// Optimization hyperparameters for both training phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub patience_epochs: usize,
    /// Training steps between validations.
    pub iterations_per_epoch: usize,
    /// Fine-tuning learning rate; `lr / 10` when unset.
    pub finetune_lr: Option<f64>,
    /// Fine-tuning batch size; `2 × batch_size` when unset.
    pub finetune_batch: Option<usize>,
    /// Samples per training excerpt.
    pub excerpt_length: usize,
    pub seed: u64,
    /// Hard cap on epochs per phase, on top of early stopping.
    pub max_epochs: Option<usize>,
    /// A validation loss counts as an improvement only when it is below the
    /// best so far by more than this.
    pub improvement_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: DEFAULT_EPSILON,
            batch_size: 16,
            patience_epochs: 20,
            iterations_per_epoch: 2000,
            finetune_lr: None,
            finetune_batch: None,
            excerpt_length: 16384,
            seed: 0,
            max_epochs: None,
            improvement_epsilon: 0.0,
        }
    }
}

impl TrainConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr {} must be finite and non-negative", self.lr));
        }
        if let Some(lr) = self.finetune_lr {
            if !(lr >= 0.0 && lr.is_finite()) {
                return bad(format!("finetune_lr {lr} must be finite and non-negative"));
            }
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} {b} outside [0, 1)"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if self.batch_size == 0 || self.finetune_batch == Some(0) {
            return bad("batch sizes must be positive".into());
        }
        if self.patience_epochs == 0 {
            return bad("patience_epochs must be positive".into());
        }
        if self.iterations_per_epoch == 0 {
            return bad("iterations_per_epoch must be positive".into());
        }
        if self.excerpt_length == 0 {
            return bad("excerpt_length must be positive".into());
        }
        if !(self.improvement_epsilon >= 0.0) {
            return bad(format!(
                "improvement_epsilon {} must be non-negative",
                self.improvement_epsilon
            ));
        }
        Ok(())
    }

    pub fn resolved_finetune_lr(&self) -> f64 {
        self.finetune_lr.unwrap_or(self.lr / 10.0)
    }

    pub fn resolved_finetune_batch(&self) -> usize {
        self.finetune_batch.unwrap_or(2 * self.batch_size)
    }

    /// Describes fine-tuning settings that differ from the derived
    /// defaults, for logging.
    pub fn finetune_overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(lr) = self.finetune_lr {
            if lr != self.lr / 10.0 {
                out.push(format!("finetune_lr {lr} overrides lr/10 = {}", self.lr / 10.0));
            }
        }
        if let Some(b) = self.finetune_batch {
            if b != 2 * self.batch_size {
                out.push(format!(
                    "finetune_batch {b} overrides 2 × batch_size = {}",
                    2 * self.batch_size
                ));
            }
        }
        out
    }
}
