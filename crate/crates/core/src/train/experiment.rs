//! Whole-protocol runners: split, normalize, train, evaluate.

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, persistence_baseline, MetricsReport};
use super::trainer::{train, validation_loss, EpochRecord, Trainable, TrainOutcome};
use super::{Result, TrainConfig, TrainError};
use crate::data::{
    chrono_split, exo_channels, make_windows, Dataset, Normalizer, SeriesView, Splits, WindowSet, DEFAULT_SPLIT,
    N_GAUGES, N_MOTIONS,
};
use crate::model::{Ablation, Model, ModelConfig};

/// A dataset cut into normalized windows for one model configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub normalizer: Normalizer,
    pub view: SeriesView,
    pub splits: Splits,
    pub train: WindowSet,
    pub val: WindowSet,
    pub test: WindowSet,
}

fn check_layout(mcfg: &ModelConfig) -> Result<()> {
    if mcfg.n_endo != N_GAUGES || mcfg.n_exo == 0 || mcfg.n_exo > N_MOTIONS {
        return Err(TrainError::Config(format!(
            "the flume layout has {N_GAUGES} gauges and up to {N_MOTIONS} motions, model expects {} and {}",
            mcfg.n_endo, mcfg.n_exo
        )));
    }
    Ok(())
}

/// Splits chronologically and fits the normalizer on the training rows
/// (identity statistics when `normalize` is false).
pub fn prepare(ds: &Dataset, mcfg: &ModelConfig, normalize: bool) -> Result<Prepared> {
    check_layout(mcfg)?;
    let splits = chrono_split(ds.len(), DEFAULT_SPLIT, mcfg.lookback + mcfg.horizon)?;
    let normalizer = if normalize {
        Normalizer::fit(&ds.channels, splits.train.clone())?
    } else {
        Normalizer::identity(ds.channels.cols())
    };
    prepare_with(ds, mcfg, normalizer)
}

/// Like [`prepare`] but with externally supplied statistics, for scoring a
/// trained model on another dataset.
pub fn prepare_with(ds: &Dataset, mcfg: &ModelConfig, normalizer: Normalizer) -> Result<Prepared> {
    check_layout(mcfg)?;
    let (l, h) = (mcfg.lookback, mcfg.horizon);
    let splits = chrono_split(ds.len(), DEFAULT_SPLIT, l + h)?;
    let view = SeriesView::new(normalizer.apply(&ds.channels), exo_channels(mcfg.n_exo))?;
    Ok(Prepared {
        train: make_windows(splits.train.clone(), l, h)?,
        val: make_windows(splits.val.clone(), l, h)?,
        test: make_windows(splits.test.clone(), l, h)?,
        normalizer,
        view,
        splits,
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: TrainOutcome,
    pub test: MetricsReport,
    pub baseline: MetricsReport,
}

/// Trains a fresh model (initialized from `mcfg.seed`) and scores it on the test split.
pub fn run_single(prepared: &Prepared, mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<RunResult> {
    let model = Model::new(mcfg)?;
    let outcome = train(&model, &prepared.view, &prepared.train, &prepared.val, tcfg, Trainable::All)?;
    let test = evaluate(&outcome.model, &prepared.view, &prepared.test, &prepared.normalizer)?;
    let baseline = persistence_baseline(&prepared.view, &prepared.test, &prepared.normalizer, &mcfg.target_indices)?;
    Ok(RunResult { outcome, test, baseline })
}

fn metric_cells(r: &MetricsReport) -> String {
    let m = &r.aggregate;
    let mape = m.mape.map_or("NA".to_string(), |v| format!("{v:.9e}"));
    format!("{:.9e},{:.9e},{:.9e},{mape}", m.mse, m.mae, m.rmse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: String,
    pub best_epoch: usize,
    pub val_mse: f64,
    pub test: MetricsReport,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub baseline: MetricsReport,
}

impl AblationReport {
    /// One row per configuration, aggregate test metrics as columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,mse,mae,rmse,mape\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", r.config, metric_cells(&r.test)));
        }
        out
    }

    pub fn row(&self, ablation: Ablation) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.config == ablation.name())
    }
}

/// Trains and scores the four module combinations with the same seeds and splits.
pub fn run_ablation(ds: &Dataset, base: &ModelConfig, tcfg: &TrainConfig) -> Result<AblationReport> {
    let prepared = prepare(ds, base, tcfg.normalize)?;
    let mut rows = Vec::with_capacity(4);
    for ab in Ablation::ALL {
        let mcfg = base.clone().with_ablation(ab);
        let r = run_single(&prepared, &mcfg, tcfg)?;
        rows.push(AblationRow {
            config: ab.name().to_string(),
            best_epoch: r.outcome.best_epoch,
            val_mse: r.outcome.best_val_loss,
            test: r.test,
            history: r.outcome.history,
        });
    }
    let baseline = persistence_baseline(&prepared.view, &prepared.test, &prepared.normalizer, &base.target_indices)?;
    Ok(AblationReport { rows, baseline })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Stacked temporal blocks, 1 to 4.
    Layers,
    /// Motions used as exogenous inputs, 1 to 3, in surge, heave, pitch order.
    ExoCount,
}

impl SweepAxis {
    pub fn values(self) -> Vec<usize> {
        match self {
            SweepAxis::Layers => (1..=4).collect(),
            SweepAxis::ExoCount => (1..=N_MOTIONS).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Layers => "layers",
            SweepAxis::ExoCount => "exo",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s {
            "layers" => Some(SweepAxis::Layers),
            "exo" | "exo_count" => Some(SweepAxis::ExoCount),
            _ => None,
        }
    }

    pub fn apply(self, base: &ModelConfig, value: usize) -> ModelConfig {
        let mut c = base.clone();
        match self {
            SweepAxis::Layers => c.n_layers = value,
            SweepAxis::ExoCount => c.n_exo = value,
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub best_epoch: usize,
    pub val_mse: f64,
    pub test: MetricsReport,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,value,mse,mae,rmse,mape\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", self.axis, r.value, metric_cells(&r.test)));
        }
        out
    }
}

/// One training run per axis value. Normalization statistics are shared;
/// the exogenous selection follows each setting.
pub fn run_sweep(ds: &Dataset, base: &ModelConfig, tcfg: &TrainConfig, axis: SweepAxis) -> Result<SweepReport> {
    let mut rows = Vec::new();
    for value in axis.values() {
        let mcfg = axis.apply(base, value);
        let prepared = prepare(ds, &mcfg, tcfg.normalize)?;
        let r = run_single(&prepared, &mcfg, tcfg)?;
        rows.push(SweepRow {
            value,
            best_epoch: r.outcome.best_epoch,
            val_mse: r.outcome.best_val_loss,
            test: r.test,
            history: r.outcome.history,
        });
    }
    Ok(SweepReport {
        axis: axis.name().to_string(),
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct FineTuneOutcome {
    pub outcome: TrainOutcome,
    pub test: MetricsReport,
    /// Every slot other than the head compared bit for bit with the input model.
    pub frozen_identical: bool,
    pub head_changed: bool,
}

/// Retrains only the output head on `prepared`, keeping everything else fixed.
pub fn fine_tune_head(model: &Model, prepared: &Prepared, tcfg: &TrainConfig) -> Result<FineTuneOutcome> {
    let mcfg = model.config();
    if prepared.view.exo_channels.len() != mcfg.n_exo {
        return Err(TrainError::Incompatible(format!(
            "model expects {} exogenous inputs, dataset view has {}",
            mcfg.n_exo,
            prepared.view.exo_channels.len()
        )));
    }
    let outcome = train(model, &prepared.view, &prepared.train, &prepared.val, tcfg, Trainable::HeadOnly)?;
    let before = model.params.entries();
    let after = outcome.model.params.entries();
    let bits = |t: &crate::tensor::Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let mut frozen_identical = true;
    let mut head_changed = false;
    for ((name, a), (_, b)) in before.iter().zip(&after) {
        let same = bits(a) == bits(b);
        if Trainable::HeadOnly.allows(name) {
            head_changed |= !same;
        } else {
            frozen_identical &= same;
        }
    }
    let test = evaluate(&outcome.model, &prepared.view, &prepared.test, &prepared.normalizer)?;
    Ok(FineTuneOutcome {
        outcome,
        test,
        frozen_identical,
        head_changed,
    })
}

/// Validation loss of a model on prepared data; re-exported for reports.
pub fn val_loss(model: &Model, prepared: &Prepared) -> Result<f64> {
    validation_loss(model, &prepared.view, &prepared.val)
}
