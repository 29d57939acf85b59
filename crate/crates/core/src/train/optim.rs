use super::{TrainConfig, TrainError};
use crate::model::ModelParams;

/// Bias-corrected Adam with per-slot first and second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// Completed steps.
    pub t: u64,
}

impl Adam {
    pub fn new(params: &ModelParams) -> Self {
        let sizes: Vec<usize> = params.entries().iter().map(|(_, t)| t.len()).collect();
        Adam {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    /// One update. Slots for which `trainable(name)` is false are left untouched,
    /// including their moments. Non-finite gradients abort before any change.
    pub fn step(
        &mut self,
        params: &mut ModelParams,
        grads: &ModelParams,
        cfg: &TrainConfig,
        trainable: impl Fn(&str) -> bool,
    ) -> Result<(), TrainError> {
        let g_entries = grads.entries();
        if let Some((name, _)) = g_entries.iter().find(|(_, g)| !g.is_finite()) {
            return Err(TrainError::Numerical {
                epoch: 0,
                batch: 0,
                msg: format!("non-finite gradient in {name}"),
            });
        }
        if g_entries.len() != self.m.len() {
            return Err(TrainError::Config("optimizer state does not match the parameters".into()));
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let mut slot = 0;
        params.for_each_mut(|name, p| {
            let i = slot;
            slot += 1;
            if !trainable(name) {
                return;
            }
            let g = g_entries[i].1.data();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((w, gj), mj), vj) in p.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mj = cfg.beta1 * *mj + (1.0 - cfg.beta1) * gj;
                *vj = cfg.beta2 * *vj + (1.0 - cfg.beta2) * gj * gj;
                let m_hat = *mj / bc1;
                let v_hat = *vj / bc2;
                *w -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps_opt);
            }
        });
        Ok(())
    }
}

/// Tracks the best validation loss and signals when to stop.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: Option<usize>,
    pub best: f64,
    pub best_epoch: usize,
    /// Consecutive epochs without a strict improvement.
    pub stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: Option<usize>) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records one epoch's validation loss; returns true when it is a new best.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.patience.is_some_and(|p| self.stale >= p)
    }
}
