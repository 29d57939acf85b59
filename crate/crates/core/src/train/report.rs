//! Flat CSV exports for plotting.

use std::fmt::Write as _;

use super::trainer::EpochRecord;
use super::Result;
use crate::data::{Normalizer, SeriesView, WindowSet, CHANNELS};
use crate::model::Model;
use crate::tensor::Tensor;

pub fn loss_history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for r in history {
        let _ = writeln!(out, "{},{:.9e},{:.9e}", r.epoch, r.train_loss, r.val_loss);
    }
    out
}

/// `window_index,gauge,step,measured,predicted` in physical units, target gauges only.
pub fn predictions_csv(
    view: &SeriesView,
    windows: &WindowSet,
    predictions: &[Tensor],
    normalizer: &Normalizer,
    targets: &[usize],
) -> String {
    let mut out = String::from("window_index,gauge,step,measured,predicted\n");
    for (wi, (&start, yhat)) in windows.starts.iter().zip(predictions).enumerate() {
        for &g in targets {
            for step in 0..windows.horizon {
                let y = normalizer.denormalize(g, view.data.get(start + windows.lookback + step, g));
                let p = normalizer.denormalize(g, yhat.get(g, step));
                let _ = writeln!(out, "{wi},{},{},{y:.9e},{p:.9e}", CHANNELS[g], step + 1);
            }
        }
    }
    out
}

/// Head-averaged cross-attention averaged over `windows`, one row per gauge.
pub fn cross_attention_csv(model: &Model, view: &SeriesView, windows: &WindowSet) -> Result<(Tensor, String)> {
    let cfg = model.config();
    let mut mean = Tensor::zeros(&[cfg.n_endo, cfg.n_exo]);
    for &s in &windows.starts {
        let w = view.window(s, cfg.lookback, cfg.horizon);
        let a = model.predict(&w.x, &w.z)?.cross_attention;
        for (m, v) in mean.data_mut().iter_mut().zip(a.data()) {
            *m += v;
        }
    }
    let n = windows.len().max(1) as f64;
    mean.data_mut().iter_mut().for_each(|v| *v /= n);
    let mut out = String::from("variate");
    for &c in &view.exo_channels {
        out.push(',');
        out.push_str(CHANNELS[c]);
    }
    out.push('\n');
    for g in 0..cfg.n_endo {
        out.push_str(CHANNELS[g]);
        for v in mean.row(g) {
            let _ = write!(out, ",{v:.9e}");
        }
        out.push('\n');
    }
    Ok((mean, out))
}
