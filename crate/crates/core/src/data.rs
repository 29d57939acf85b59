//! Gauge and motion time series, chronological splits and sliding windows.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::tensor::Tensor;

/// Channel order of every dataset: nine gauges, then the body motions.
pub const CHANNELS: [&str; 12] = [
    "wg1", "wg2", "wg3", "wg4", "wg5", "wg6", "wg7", "wg8", "wg9", "surge", "heave", "pitch",
];
pub const N_GAUGES: usize = 9;
pub const N_MOTIONS: usize = 3;
/// Downstream gauges wg6..wg9 as endogenous row indices.
pub const TARGET_GAUGES: [usize; 4] = [5, 6, 7, 8];
pub const DEFAULT_SPLIT: [f64; 3] = [0.7, 0.1, 0.2];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("data io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("insufficient data: {what} has {rows} rows, needs at least {need}")]
    Insufficient { what: String, rows: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub times: Vec<f64>,
    /// `[N × 12]` in [`CHANNELS`] order.
    pub channels: Tensor,
    pub name: String,
}

impl Dataset {
    pub fn new(times: Vec<f64>, channels: Tensor, name: impl Into<String>) -> Result<Self> {
        let ds = Dataset {
            times,
            channels,
            name: name.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.channels.shape() != [n, CHANNELS.len()] {
            return Err(DataError::Invalid(format!(
                "channels have shape {:?}, expected [{n}, {}]",
                self.channels.shape(),
                CHANNELS.len()
            )));
        }
        if n < 2 {
            return Err(DataError::Insufficient { what: "dataset".into(), rows: n, need: 2 });
        }
        let dt = self.times[1] - self.times[0];
        if !(dt > 0.0) {
            return Err(DataError::Invalid("times must be strictly increasing".into()));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 {
                return Err(DataError::Invalid(format!(
                    "irregular time step at row {}: {} vs {dt}",
                    i + 1,
                    w[1] - w[0]
                )));
            }
        }
        if !self.channels.is_finite() || self.times.iter().any(|t| !t.is_finite()) {
            return Err(DataError::Invalid("non-finite value in dataset".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// CSV text: header `time,wg1,...,pitch`, values with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 13 * 16);
        out.push_str("time");
        for c in CHANNELS {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t:.8e}");
            for v in self.channels.row(i) {
                let _ = write!(out, ",{v:.8e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, name: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| DataError::Invalid("empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let find = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| DataError::MissingColumn(name.to_string()))
        };
        let time_col = find("time")?;
        let map = CHANNELS.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
        if let Some(extra) = cols.iter().find(|c| **c != "time" && !CHANNELS.contains(c)) {
            return Err(DataError::Invalid(format!("unexpected column '{extra}'")));
        }
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(DataError::Parse {
                    line: i + 1,
                    msg: format!("expected {} fields, found {}", cols.len(), fields.len()),
                });
            }
            let parse = |j: usize| {
                fields[j].trim().parse::<f64>().map_err(|_| DataError::Parse {
                    line: i + 1,
                    msg: format!("cannot parse '{}' in column {}", fields[j], cols[j]),
                })
            };
            times.push(parse(time_col)?);
            for &j in &map {
                data.push(parse(j)?);
            }
        }
        let n = times.len();
        if n == 0 {
            return Err(DataError::Insufficient { what: "dataset".into(), rows: 0, need: 2 });
        }
        let channels = Tensor::new(vec![n, CHANNELS.len()], data).map_err(|e| DataError::Invalid(e.to_string()))?;
        Dataset::new(times, channels, name)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
        Dataset::from_csv(&text, name)
    }
}

/// Contiguous row ranges of the chronological split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Splits `0..n` at `floor(n·cumfrac)`; the remainder goes to the last part.
/// Every part must hold at least `min_rows` rows.
pub fn chrono_split(n: usize, fractions: [f64; 3], min_rows: usize) -> Result<Splits> {
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || fractions.iter().any(|f| *f < 0.0) {
        return Err(DataError::Invalid(format!("split fractions {fractions:?} must be >= 0 and sum to 1")));
    }
    // The small offset keeps exact products such as 100·0.8 from landing just below an integer.
    let cut = |c: f64| ((n as f64 * c + 1e-9).floor() as usize).min(n);
    let a = cut(fractions[0]);
    let b = cut(fractions[0] + fractions[1]).max(a);
    let s = Splits {
        train: 0..a,
        val: a..b,
        test: b..n,
    };
    for (what, r) in [("train split", &s.train), ("validation split", &s.val), ("test split", &s.test)] {
        if r.len() < min_rows {
            return Err(DataError::Insufficient {
                what: what.into(),
                rows: r.len(),
                need: min_rows,
            });
        }
    }
    Ok(s)
}

/// Stride-1 windows inside one row range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSet {
    /// First row of each window.
    pub starts: Vec<usize>,
    pub lookback: usize,
    pub horizon: usize,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Keeps the first `n` windows.
    pub fn truncated(&self, n: usize) -> WindowSet {
        WindowSet {
            starts: self.starts.iter().copied().take(n).collect(),
            ..self.clone()
        }
    }
}

pub fn make_windows(rows: Range<usize>, lookback: usize, horizon: usize) -> Result<WindowSet> {
    let need = lookback + horizon;
    if rows.len() < need || lookback == 0 || horizon == 0 {
        return Err(DataError::Insufficient {
            what: "window range".into(),
            rows: rows.len(),
            need,
        });
    }
    Ok(WindowSet {
        starts: (rows.start..=rows.end - need).collect(),
        lookback,
        horizon,
    })
}

/// Per-channel z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub const STD_FLOOR: f64 = 1e-8;

impl Normalizer {
    /// Fits on `rows` of a `[N × K]` matrix.
    pub fn fit(data: &Tensor, rows: Range<usize>) -> Result<Self> {
        if rows.is_empty() || rows.end > data.rows() {
            return Err(DataError::Insufficient {
                what: "normalization range".into(),
                rows: rows.len(),
                need: 1,
            });
        }
        let k = data.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; k];
        for r in rows.clone() {
            for (m, v) in mean.iter_mut().zip(data.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; k];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(data.row(r)).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var.iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Normalizer { mean, std })
    }

    pub fn identity(k: usize) -> Self {
        Normalizer {
            mean: vec![0.0; k],
            std: vec![1.0; k],
        }
    }

    pub fn apply(&self, data: &Tensor) -> Tensor {
        let k = self.mean.len();
        let mut out = data.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let c = i % k;
            *v = (*v - self.mean[c]) / self.std[c];
        }
        out
    }

    pub fn inverse(&self, data: &Tensor) -> Tensor {
        let k = self.mean.len();
        let mut out = data.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let c = i % k;
            *v = *v * self.std[c] + self.mean[c];
        }
        out
    }

    /// Physical value of one normalized entry of channel `c`.
    pub fn denormalize(&self, c: usize, v: f64) -> f64 {
        v * self.std[c] + self.mean[c]
    }
}

/// A normalized series plus the channel selection the model sees.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesView {
    /// `[N × 12]`, normalized.
    pub data: Tensor,
    /// Columns fed as exogenous inputs, in order.
    pub exo_channels: Vec<usize>,
}

/// One training example: `x [L × 9]`, `z [L × C]`, `y [9 × H]` (variate-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub x: Tensor,
    pub z: Tensor,
    pub y: Tensor,
}

impl SeriesView {
    pub fn new(data: Tensor, exo_channels: Vec<usize>) -> Result<Self> {
        if exo_channels.is_empty() || exo_channels.iter().any(|&c| c < N_GAUGES || c >= CHANNELS.len()) {
            return Err(DataError::Invalid(format!(
                "exogenous channels {exo_channels:?} must be a non-empty subset of {N_GAUGES}..{}",
                CHANNELS.len()
            )));
        }
        Ok(SeriesView { data, exo_channels })
    }

    pub fn window(&self, start: usize, lookback: usize, horizon: usize) -> Window {
        let c = self.exo_channels.len();
        let mut x = Vec::with_capacity(lookback * N_GAUGES);
        let mut z = Vec::with_capacity(lookback * c);
        for r in start..start + lookback {
            let row = self.data.row(r);
            x.extend_from_slice(&row[..N_GAUGES]);
            z.extend(self.exo_channels.iter().map(|&j| row[j]));
        }
        let mut y = vec![0.0; N_GAUGES * horizon];
        for h in 0..horizon {
            let row = self.data.row(start + lookback + h);
            for g in 0..N_GAUGES {
                y[g * horizon + h] = row[g];
            }
        }
        Window {
            x: Tensor::new(vec![lookback, N_GAUGES], x).expect("window shape"),
            z: Tensor::new(vec![lookback, c], z).expect("window shape"),
            y: Tensor::new(vec![N_GAUGES, horizon], y).expect("window shape"),
        }
    }
}

/// Exogenous columns for the first `k` motions (surge, heave, pitch order).
pub fn exo_channels(k: usize) -> Vec<usize> {
    (N_GAUGES..N_GAUGES + k.min(N_MOTIONS)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_dataset(n: usize) -> Dataset {
        let times = (0..n).map(|i| i as f64 * 0.05).collect();
        let data = (0..n * 12).map(|i| (i / 12) as f64 + 0.01 * (i % 12) as f64).collect();
        Dataset::new(times, Tensor::new(vec![n, 12], data).unwrap(), "ramp").unwrap()
    }

    #[test]
    fn split_sizes() {
        let s = chrono_split(100, DEFAULT_SPLIT, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 10, 20));
        let s = chrono_split(10001, DEFAULT_SPLIT, 96).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (7000, 1000, 2001));
        assert!(chrono_split(500, DEFAULT_SPLIT, 96).is_err());
        assert!(chrono_split(100, [0.5, 0.5, 0.5], 1).is_err());
    }

    #[test]
    fn window_counts() {
        assert_eq!(make_windows(0..96, 48, 48).unwrap().len(), 1);
        assert_eq!(make_windows(0..10001, 48, 48).unwrap().len(), 9906);
        assert!(matches!(make_windows(0..95, 48, 48), Err(DataError::Insufficient { .. })));
        let w = make_windows(10..110, 4, 2).unwrap();
        assert_eq!(w.starts.first(), Some(&10));
        assert_eq!(*w.starts.last().unwrap() + 6, 110);
    }

    #[test]
    fn window_contents() {
        let ds = ramp_dataset(20);
        let view = SeriesView::new(ds.channels.clone(), vec![9, 11]).unwrap();
        let w = view.window(3, 4, 2);
        assert_eq!(w.x.shape(), &[4, 9]);
        assert_eq!(w.z.shape(), &[4, 2]);
        assert_eq!(w.y.shape(), &[9, 2]);
        assert_eq!(w.x.get(0, 0), 3.0);
        assert!((w.z.get(1, 1) - 4.11).abs() < 1e-12);
        // y row g, step h is channel g at row start+L+h.
        assert!((w.y.get(6, 1) - 8.06).abs() < 1e-12);
        assert!(SeriesView::new(ds.channels, vec![3]).is_err());
    }

    #[test]
    fn csv_round_trip_and_schema_errors() {
        let ds = ramp_dataset(30);
        let text = ds.to_csv();
        assert!(text.starts_with("time,wg1,wg2,wg3,wg4,wg5,wg6,wg7,wg8,wg9,surge,heave,pitch\n"));
        let back = Dataset::from_csv(&text, "ramp").unwrap();
        assert!(back.channels.max_abs_diff(&ds.channels) < 1e-7);
        let no_pitch: String = text
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
            .collect();
        match Dataset::from_csv(&no_pitch, "x") {
            Err(DataError::MissingColumn(c)) => assert_eq!(c, "pitch"),
            other => panic!("{other:?}"),
        }
        let bad = text.replacen("0.00000000e0", "abc", 1);
        assert!(matches!(Dataset::from_csv(&bad, "x"), Err(DataError::Parse { .. })));
    }

    #[test]
    fn irregular_time_is_rejected() {
        let mut times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        times[5] += 0.1;
        assert!(Dataset::new(times, Tensor::zeros(&[10, 12]), "x").is_err());
    }

    #[test]
    fn normalizer_degenerate_channel_and_round_trip() {
        let ds = ramp_dataset(50);
        let mut data = ds.channels.clone();
        for r in 0..50 {
            data.set(r, 4, 2.0);
        }
        let norm = Normalizer::fit(&data, 0..30).unwrap();
        assert_eq!(norm.std[4], STD_FLOOR);
        let z = norm.apply(&data);
        assert!(z.is_finite());
        assert!(norm.inverse(&z).max_abs_diff(&data) < 1e-12);
        // Train statistics only.
        let col0: Vec<f64> = (0..30).map(|r| z.get(r, 0)).collect();
        assert!(col0.iter().sum::<f64>().abs() < 1e-9);
        let refit = Normalizer::fit(&z, 0..30).unwrap();
        assert!((refit.std[0] - 1.0).abs() < 1e-12 && refit.mean[0].abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn splits_partition_rows(n in 300usize..20_000) {
            let s = chrono_split(n, DEFAULT_SPLIT, 1).unwrap();
            prop_assert_eq!(s.train.start, 0);
            prop_assert_eq!(s.train.end, s.val.start);
            prop_assert_eq!(s.val.end, s.test.start);
            prop_assert_eq!(s.test.end, n);
            for r in [&s.train, &s.val, &s.test] {
                if let Ok(w) = make_windows(r.clone(), 48, 48) {
                    prop_assert!(w.starts.iter().all(|&st| st >= r.start && st + 96 <= r.end));
                    prop_assert_eq!(w.len(), r.len() - 96 + 1);
                }
            }
        }

        #[test]
        fn normalization_round_trip(values in proptest::collection::vec(-50.0f64..50.0, 120)) {
            let t = Tensor::new(vec![10, 12], values).unwrap();
            let n = Normalizer::fit(&t, 0..7).unwrap();
            prop_assert!(n.inverse(&n.apply(&t)).max_abs_diff(&t) < 1e-12 * 1e3);
        }
    }
}
