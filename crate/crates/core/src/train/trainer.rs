use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::{Adam, EarlyStopping};
use super::{Result, TrainConfig, TrainError};
use crate::data::{SeriesView, WindowSet};
use crate::model::{mse_loss, Model, ModelConfig, ModelParams, Network};
use crate::rng::rng_for;
use crate::tensor::Tape;

/// Which parameter slots receive updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trainable {
    All,
    /// Only the output head and its bias.
    HeadOnly,
}

impl Trainable {
    pub fn allows(self, name: &str) -> bool {
        match self {
            Trainable::All => true,
            Trainable::HeadOnly => name == "head" || name == "head_bias",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// 0 when the starting parameters were never beaten.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Validation loss of the starting parameters.
    pub initial_val_loss: f64,
}

/// Mean target-gauge MSE over `windows` in normalized units, without dropout.
pub fn validation_loss(model: &Model, view: &SeriesView, windows: &WindowSet) -> Result<f64> {
    let cfg = model.config();
    let mut total = 0.0;
    for &s in &windows.starts {
        let w = view.window(s, cfg.lookback, cfg.horizon);
        let yhat = model.predict(&w.x, &w.z)?.yhat;
        let mut se = 0.0;
        for &g in &cfg.target_indices {
            for (a, b) in yhat.row(g).iter().zip(w.y.row(g)) {
                se += (a - b) * (a - b);
            }
        }
        total += se / (cfg.target_indices.len() * cfg.horizon) as f64;
    }
    Ok(total / windows.len().max(1) as f64)
}

fn add_into(acc: &mut ModelParams, g: &ModelParams) {
    let src = g.entries();
    let mut i = 0;
    acc.for_each_mut(|_, t| {
        for (a, b) in t.data_mut().iter_mut().zip(src[i].1.data()) {
            *a += b;
        }
        i += 1;
    });
}

/// Mini-batch Adam on the target-gauge MSE with early stopping on validation MSE.
///
/// Batches are drawn from a seeded shuffle each epoch, the last partial batch
/// is kept, and the returned model holds the best validation parameters.
/// With [`Trainable::HeadOnly`] every other slot is bound as a constant, so
/// it stays bit-identical.
pub fn train(
    model: &Model,
    view: &SeriesView,
    train_windows: &WindowSet,
    val_windows: &WindowSet,
    cfg: &TrainConfig,
    trainable: Trainable,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_windows.is_empty() || val_windows.is_empty() {
        return Err(TrainError::Config("training needs non-empty train and validation windows".into()));
    }
    let mcfg = model.config().clone();
    let net = Network::new(&ModelConfig { dropout: cfg.dropout, ..mcfg.clone() })?;
    let mut params = model.params.clone();
    let mut adam = Adam::new(&params);
    let mut shuffle = rng_for(cfg.seed, "shuffle");
    let mut drop_rng = rng_for(cfg.seed, "dropout");
    let initial_val_loss = validation_loss(model, view, val_windows)?;
    let mut stopper = EarlyStopping::new(cfg.patience);
    // Fine-tuning starts from a trained model, which is itself a candidate.
    if trainable == Trainable::HeadOnly {
        stopper.observe(0, initial_val_loss);
    }
    let mut best = params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let mut losses = vec![0.0; train_windows.len()];
    for epoch in 1..=cfg.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut shuffle);
        for (b, batch) in order.chunks(cfg.batch).enumerate() {
            let mut acc = params.zeros_like();
            for &wi in batch {
                let w = view.window(train_windows.starts[wi], mcfg.lookback, mcfg.horizon);
                let tape = Tape::new();
                let p = params.map_named(|name, t| {
                    if trainable.allows(name) {
                        tape.param(t.clone())
                    } else {
                        tape.constant(t.clone())
                    }
                });
                let out = net.forward(tape.constant(w.x), tape.constant(w.z), &p, Some(&mut drop_rng))?;
                let loss = mse_loss(out.yhat, tape.constant(w.y), &mcfg.target_indices)?;
                let value = loss.scalar();
                if !value.is_finite() {
                    return Err(TrainError::Numerical {
                        epoch,
                        batch: b,
                        msg: format!("loss is {value} on window {}", train_windows.starts[wi]),
                    });
                }
                losses[wi] = value;
                let mut grads = tape.backward(loss).map_err(|e| TrainError::Numerical {
                    epoch,
                    batch: b,
                    msg: e.to_string(),
                })?;
                add_into(&mut acc, &p.gradients(&mut grads));
            }
            let scale = 1.0 / batch.len() as f64;
            acc.for_each_mut(|_, t| t.data_mut().iter_mut().for_each(|v| *v *= scale));
            adam.step(&mut params, &acc, cfg, |n| trainable.allows(n)).map_err(|e| match e {
                TrainError::Numerical { msg, .. } => TrainError::Numerical { epoch, batch: b, msg },
                other => other,
            })?;
        }
        // Summed in window order so the value does not depend on the shuffle.
        let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
        let current = Model::from_parts(&mcfg, params.clone())?;
        let val_loss = validation_loss(&current, view, val_windows)?;
        if !val_loss.is_finite() {
            return Err(TrainError::Numerical {
                epoch,
                batch: order.len().div_ceil(cfg.batch),
                msg: format!("validation loss is {val_loss}"),
            });
        }
        history.push(EpochRecord { epoch, train_loss, val_loss });
        if stopper.observe(epoch, val_loss) {
            best = params.clone();
        }
        if stopper.should_stop() {
            break;
        }
    }
    Ok(TrainOutcome {
        model: Model::from_parts(&mcfg, best)?,
        history,
        best_epoch: stopper.best_epoch,
        best_val_loss: stopper.best,
        initial_val_loss,
    })
}
