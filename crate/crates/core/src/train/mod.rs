//! Training, evaluation and the experiment runners built on them.

mod experiment;
mod metrics;
mod optim;
mod report;
mod trainer;

pub use experiment::{
    fine_tune_head, prepare, prepare_with, run_ablation, run_single, run_sweep, AblationReport, AblationRow, FineTuneOutcome,
    Prepared, RunResult, SweepAxis, SweepReport, SweepRow, val_loss,
};
pub use metrics::{
    evaluate, persistence_baseline, predict_windows, Metrics, MetricsAccumulator, MetricsReport, GaugeMetrics,
    HorizonMetrics, HORIZON_OFFSETS, MAPE_FLOOR,
};
pub use optim::{Adam, EarlyStopping};
pub use report::{cross_attention_csv, loss_history_csv, predictions_csv};
pub use trainer::{train, validation_loss, EpochRecord, Trainable, TrainOutcome};

use thiserror::Error;

use crate::data::DataError;
use crate::model::ModelError;

/// Optimisation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; `None` disables early stopping.
    pub patience: Option<usize>,
    pub dropout: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_opt: f64,
    pub seed: u64,
    pub normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch: 32,
            max_epochs: 20,
            patience: Some(3),
            dropout: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps_opt: 1e-8,
            seed: 0,
            normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> std::result::Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if self.batch == 0 || self.max_epochs == 0 {
            return bad("batch and max_epochs must be >= 1".into());
        }
        if let Some(p) = self.patience {
            if p == 0 || p > self.max_epochs {
                return bad(format!("patience must be in 1..={}, got {p}", self.max_epochs));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0 && self.eps_opt > 0.0) {
            return bad("Adam needs beta1, beta2 in (0, 1) and eps_opt > 0".into());
        }
        Ok(())
    }

    pub fn to_entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lr", self.lr.to_string()),
            ("batch", self.batch.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("patience", self.patience.map_or("none".into(), |p| p.to_string())),
            ("dropout", self.dropout.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("eps_opt", self.eps_opt.to_string()),
            ("normalize", self.normalize.to_string()),
        ]
    }

    pub fn set_entry(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("{key}: cannot parse '{v}'"));
        let count = |v: &str| v.parse::<usize>().map_err(|_| format!("{key}: cannot parse '{v}'"));
        match key {
            "lr" => self.lr = num(value)?,
            "batch" => self.batch = count(value)?,
            "max_epochs" => self.max_epochs = count(value)?,
            "patience" => self.patience = if value == "none" { None } else { Some(count(value)?) },
            "dropout" => self.dropout = num(value)?,
            "beta1" => self.beta1 = num(value)?,
            "beta2" => self.beta2 = num(value)?,
            "eps_opt" => self.eps_opt = num(value)?,
            "normalize" => {
                self.normalize = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(format!("{key}: expected true or false, got '{value}'")),
                }
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("numerical failure at epoch {epoch}, batch {batch}: {msg}")]
    Numerical { epoch: usize, batch: usize, msg: String },
    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),
}

pub type Result<T> = std::result::Result<T, TrainError>;
