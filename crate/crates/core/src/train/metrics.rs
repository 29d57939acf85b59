//! Forecast error metrics in physical units.

use serde::{Deserialize, Serialize};

use crate::data::{Normalizer, SeriesView, WindowSet, CHANNELS};
use crate::model::Model;
use crate::tensor::Tensor;

use super::Result;

/// Targets with `|y|` below this are left out of the percentage error.
pub const MAPE_FLOOR: f64 = 1e-8;

/// 1-based forecast steps reported separately.
pub const HORIZON_OFFSETS: [usize; 8] = [1, 7, 13, 19, 25, 31, 37, 43];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Percent; `None` when every target was below [`MAPE_FLOOR`].
    pub mape: Option<f64>,
    pub mape_skipped: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    se: f64,
    ae: f64,
    ape: f64,
    n: usize,
    n_ape: usize,
}

impl MetricsAccumulator {
    pub fn push(&mut self, y: f64, yhat: f64) {
        let e = yhat - y;
        self.se += e * e;
        self.ae += e.abs();
        self.n += 1;
        if y.abs() >= MAPE_FLOOR {
            self.ape += (e / y).abs();
            self.n_ape += 1;
        }
    }

    pub fn abs_error_sum(&self) -> f64 {
        self.ae
    }

    pub fn finish(&self) -> Metrics {
        let n = self.n.max(1) as f64;
        let mse = self.se / n;
        Metrics {
            mse,
            mae: self.ae / n,
            rmse: mse.sqrt(),
            mape: (self.n_ape > 0).then(|| 100.0 * self.ape / self.n_ape as f64),
            mape_skipped: self.n - self.n_ape,
            n: self.n,
        }
    }
}

impl Metrics {
    /// Metrics of paired samples.
    pub fn of(y: &[f64], yhat: &[f64]) -> Metrics {
        let mut acc = MetricsAccumulator::default();
        for (a, b) in y.iter().zip(yhat) {
            acc.push(*a, *b);
        }
        acc.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeMetrics {
    pub gauge: String,
    pub metrics: Metrics,
    /// Sum of absolute errors over every window and step.
    pub cumulative_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    /// 1-based forecast step.
    pub step: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fingerprint: String,
    pub n_windows: usize,
    pub aggregate: Metrics,
    pub per_gauge: Vec<GaugeMetrics>,
    pub per_horizon: Vec<HorizonMetrics>,
}

impl MetricsReport {
    /// Scores `[F × H]` normalized forecasts against the windows they came from.
    pub fn from_predictions(
        view: &SeriesView,
        windows: &WindowSet,
        predictions: &[Tensor],
        normalizer: &Normalizer,
        targets: &[usize],
        fingerprint: String,
    ) -> MetricsReport {
        let h = windows.horizon;
        let mut total = MetricsAccumulator::default();
        let mut gauges = vec![MetricsAccumulator::default(); targets.len()];
        let offsets: Vec<usize> = HORIZON_OFFSETS.iter().copied().filter(|&s| s <= h).collect();
        let mut steps = vec![MetricsAccumulator::default(); offsets.len()];
        for (&start, yhat) in windows.starts.iter().zip(predictions) {
            for (gi, &g) in targets.iter().enumerate() {
                for step in 0..h {
                    let row = start + windows.lookback + step;
                    let y = normalizer.denormalize(g, view.data.get(row, g));
                    let p = normalizer.denormalize(g, yhat.get(g, step));
                    total.push(y, p);
                    gauges[gi].push(y, p);
                    if let Some(k) = offsets.iter().position(|&s| s == step + 1) {
                        steps[k].push(y, p);
                    }
                }
            }
        }
        MetricsReport {
            fingerprint,
            n_windows: windows.len(),
            aggregate: total.finish(),
            per_gauge: targets
                .iter()
                .zip(&gauges)
                .map(|(&g, acc)| GaugeMetrics {
                    gauge: CHANNELS[g].to_string(),
                    metrics: acc.finish(),
                    cumulative_abs_error: acc.abs_error_sum(),
                })
                .collect(),
            per_horizon: offsets
                .iter()
                .zip(&steps)
                .map(|(&step, acc)| HorizonMetrics { step, metrics: acc.finish() })
                .collect(),
        }
    }
}

/// Deterministic forecasts (no dropout), normalized, one `[F × H]` per window.
pub fn predict_windows(model: &Model, view: &SeriesView, windows: &WindowSet) -> Result<Vec<Tensor>> {
    let cfg = model.config();
    windows
        .starts
        .iter()
        .map(|&s| {
            let w = view.window(s, cfg.lookback, cfg.horizon);
            Ok(model.predict(&w.x, &w.z)?.yhat)
        })
        .collect()
}

/// Test metrics of a model over the target gauges.
pub fn evaluate(model: &Model, view: &SeriesView, windows: &WindowSet, normalizer: &Normalizer) -> Result<MetricsReport> {
    if windows.is_empty() {
        return Err(crate::data::DataError::Insufficient {
            what: "evaluation windows".into(),
            rows: 0,
            need: 1,
        }
        .into());
    }
    let preds = predict_windows(model, view, windows)?;
    let cfg = model.config();
    Ok(MetricsReport::from_predictions(
        view,
        windows,
        &preds,
        normalizer,
        &cfg.target_indices,
        cfg.fingerprint(),
    ))
}

/// Forecasts that hold each gauge's last observed value for the whole horizon.
pub fn persistence_baseline(
    view: &SeriesView,
    windows: &WindowSet,
    normalizer: &Normalizer,
    targets: &[usize],
) -> Result<MetricsReport> {
    if windows.is_empty() {
        return Err(crate::data::DataError::Insufficient {
            what: "evaluation windows".into(),
            rows: 0,
            need: 1,
        }
        .into());
    }
    let n_gauges = crate::data::N_GAUGES;
    let preds: Vec<Tensor> = windows
        .starts
        .iter()
        .map(|&s| {
            let last = view.data.row(s + windows.lookback - 1);
            let data = (0..n_gauges)
                .flat_map(|g| std::iter::repeat_n(last[g], windows.horizon))
                .collect();
            Tensor::new(vec![n_gauges, windows.horizon], data).expect("baseline shape")
        })
        .collect();
    Ok(MetricsReport::from_predictions(
        view,
        windows,
        &preds,
        normalizer,
        targets,
        "persistence".into(),
    ))
}
