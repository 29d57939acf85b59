//! The `fanet` command line: simulate, train, eval, ablate, sweep, finetune.
//!
//! Every command writes into its `--out` directory, echoes the resolved
//! config and the tool version there, and exits with 0 on success, 2 for
//! config errors, 3 for data errors and 4 for numerical failures.

mod config;

pub use config::RunConfig;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{Dataset, DataError, Normalizer};
use crate::model::{Ablation, Checkpoint, CheckpointError, Model, ModelConfig, ModelError};
use crate::sim::{generate_dataset, SimError};
use crate::tensor::Tensor;
use crate::train::{
    cross_attention_csv, evaluate, fine_tune_head, loss_history_csv, persistence_baseline, predict_windows,
    predictions_csv, prepare, prepare_with, run_ablation, run_single, run_sweep, EpochRecord, MetricsReport,
    SweepAxis, TrainError,
};

pub const VERSION: &str = concat!("fanet ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "fanet", version, about = "Wave-flume simulator and wave forecaster")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value config file; defaults apply to every missing key.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the flume and write the gauge/motion CSV plus metadata.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Train on a dataset and score the test split.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// e2eca, ta-e2eca, dbfm-e2eca or full.
        #[arg(long)]
        ablation: Option<String>,
    },
    /// Score a checkpoint on a dataset's test split next to the persistence baseline.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Train and compare the four module combinations.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Train once per setting of one hyperparameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// layers or exo.
        #[arg(long, default_value = "layers")]
        axis: String,
    },
    /// Retrain only the output head of a checkpoint on a new dataset.
    Finetune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(m) | TrainError::Incompatible(m) => CliError::Config(m),
            TrainError::Data(d) => d.into(),
            TrainError::Model(m) => m.into(),
            other @ TrainError::Numerical { .. } => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Incompatible(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let cfg = cfg.with_seed(common.seed);
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

/// Creates the output directory and records the resolved config and version.
fn open_out(dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write(&dir.join("config.resolved"), &cfg.resolved_text())?;
    write(&dir.join("VERSION"), &format!("{VERSION}\n"))
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    Dataset::load_csv(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

const NORM_MEAN: &str = "norm_mean";
const NORM_STD: &str = "norm_std";

fn checkpoint_for(model: &Model, normalizer: &Normalizer, meta: BTreeMap<String, String>) -> Checkpoint {
    let mut ck = Checkpoint::new(model.config().clone(), model.params.clone());
    ck.extras.insert(NORM_MEAN.into(), Tensor::vector(normalizer.mean.clone()));
    ck.extras.insert(NORM_STD.into(), Tensor::vector(normalizer.std.clone()));
    ck.meta = meta;
    ck
}

fn normalizer_of(ck: &Checkpoint) -> Result<Normalizer, CliError> {
    match (ck.extras.get(NORM_MEAN), ck.extras.get(NORM_STD)) {
        (Some(m), Some(s)) if m.len() == s.len() => Ok(Normalizer {
            mean: m.data().to_vec(),
            std: s.data().to_vec(),
        }),
        _ => Err(CliError::Data("checkpoint lacks normalization statistics".into())),
    }
}

fn load_checkpoint(path: &Path) -> Result<(Checkpoint, Model, Normalizer), CliError> {
    let ck = Checkpoint::load(path).map_err(|e| match e {
        CheckpointError::Incompatible(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })?;
    let model = Model::from_parts(&ck.config, ck.params.clone())?;
    let norm = normalizer_of(&ck)?;
    Ok((ck, model, norm))
}

fn log_history(history: &[EpochRecord]) {
    for r in history {
        eprintln!("epoch {:>3}  train {:.6e}  val {:.6e}", r.epoch, r.train_loss, r.val_loss);
    }
}

#[derive(Serialize)]
struct TrainReport<'a> {
    version: &'a str,
    ablation: String,
    best_epoch: usize,
    best_val_loss: f64,
    epochs_run: usize,
    test: &'a MetricsReport,
    persistence: &'a MetricsReport,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    version: &'a str,
    dataset: &'a str,
    model: &'a MetricsReport,
    persistence: &'a MetricsReport,
}

#[derive(Serialize)]
struct FinetuneReport<'a> {
    version: &'a str,
    frozen_identical: bool,
    head_changed: bool,
    initial_val_loss: f64,
    best_val_loss: f64,
    best_epoch: usize,
    test: &'a MetricsReport,
}

fn cmd_simulate(common: &Common) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    open_out(&common.out, &cfg)?;
    let ds = match generate_dataset(&cfg.flume) {
        Ok(ds) => ds,
        Err(SimError::Partial { last_stable_time, rows, reason, partial }) => {
            if let Some(p) = partial {
                write(&common.out.join("partial.csv"), &p.to_csv())?;
            }
            return Err(CliError::Numerical(format!(
                "simulation unstable after {rows} rows (last stable t = {last_stable_time} s): {reason}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let csv = common.out.join(format!("{}.csv", ds.name));
    write(&csv, &ds.to_csv())?;
    write(&csv.with_extension("meta"), &cfg.flume.metadata())?;
    eprintln!("wrote {} ({} rows)", csv.display(), ds.len());
    Ok(())
}

fn cmd_train(common: &Common, data: &Path, ablation: Option<&str>) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(a) = ablation {
        let ab: Ablation = a.parse()?;
        cfg.model = cfg.model.clone().with_ablation(ab);
        let (dbfm, ta) = ab.toggles();
        cfg.explicit_model_keys.extend(["enable_dbfm".to_string(), "enable_ta".to_string()]);
        debug_assert_eq!((cfg.model.enable_dbfm, cfg.model.enable_ta), (dbfm, ta));
    }
    open_out(&common.out, &cfg)?;
    let ds = load_dataset(data)?;
    let prepared = prepare(&ds, &cfg.model, cfg.train.normalize)?;
    let run = run_single(&prepared, &cfg.model, &cfg.train)?;
    log_history(&run.outcome.history);
    let meta = BTreeMap::from([
        ("best_epoch".to_string(), run.outcome.best_epoch.to_string()),
        ("dataset".to_string(), ds.name.clone()),
        ("version".to_string(), VERSION.to_string()),
    ]);
    checkpoint_for(&run.outcome.model, &prepared.normalizer, meta)
        .save(&common.out.join("model.ckpt"))?;
    write(&common.out.join("loss_history.csv"), &loss_history_csv(&run.outcome.history))?;
    write_json(
        &common.out.join("report.json"),
        &TrainReport {
            version: VERSION,
            ablation: cfg.model.ablation().to_string(),
            best_epoch: run.outcome.best_epoch,
            best_val_loss: run.outcome.best_val_loss,
            epochs_run: run.outcome.history.len(),
            test: &run.test,
            persistence: &run.baseline,
        },
    )?;
    eprintln!(
        "test MSE {:.6e} (persistence {:.6e})",
        run.test.aggregate.mse, run.baseline.aggregate.mse
    );
    Ok(())
}

fn cmd_eval(common: &Common, checkpoint: &Path, data: &Path) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    open_out(&common.out, &cfg)?;
    let (_, model, norm) = load_checkpoint(checkpoint)?;
    let ds = load_dataset(data)?;
    let prepared = prepare_with(&ds, model.config(), norm)?;
    let report = evaluate(&model, &prepared.view, &prepared.test, &prepared.normalizer)?;
    let baseline = persistence_baseline(
        &prepared.view,
        &prepared.test,
        &prepared.normalizer,
        &model.config().target_indices,
    )?;
    let preds = predict_windows(&model, &prepared.view, &prepared.test)?;
    write(
        &common.out.join("predictions.csv"),
        &predictions_csv(
            &prepared.view,
            &prepared.test,
            &preds,
            &prepared.normalizer,
            &model.config().target_indices,
        ),
    )?;
    let (_, heat) = cross_attention_csv(&model, &prepared.view, &prepared.test)?;
    write(&common.out.join("cross_attention.csv"), &heat)?;
    write_json(
        &common.out.join("report.json"),
        &EvalReport {
            version: VERSION,
            dataset: &ds.name,
            model: &report,
            persistence: &baseline,
        },
    )?;
    eprintln!("test MSE {:.6e} (persistence {:.6e})", report.aggregate.mse, baseline.aggregate.mse);
    Ok(())
}

fn cmd_ablate(common: &Common, data: &Path) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    open_out(&common.out, &cfg)?;
    let ds = load_dataset(data)?;
    let report = run_ablation(&ds, &cfg.model, &cfg.train)?;
    for row in &report.rows {
        let dir = common.out.join(&row.config);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        write(&dir.join("loss_history.csv"), &loss_history_csv(&row.history))?;
        write_json(&dir.join("report.json"), row)?;
        eprintln!("{:<11} val {:.6e}  test {:.6e}", row.config, row.val_mse, row.test.aggregate.mse);
    }
    write(&common.out.join("ablation.csv"), &report.to_csv())?;
    write_json(&common.out.join("ablation.json"), &report)
}

fn cmd_sweep(common: &Common, data: &Path, axis: &str) -> Result<(), CliError> {
    let axis = SweepAxis::parse(axis)
        .ok_or_else(|| CliError::Config(format!("unknown sweep axis '{axis}' (expected layers or exo)")))?;
    let cfg = load_config(common)?;
    open_out(&common.out, &cfg)?;
    let ds = load_dataset(data)?;
    let report = run_sweep(&ds, &cfg.model, &cfg.train, axis)?;
    for row in &report.rows {
        let dir = common.out.join(format!("{}_{}", report.axis, row.value));
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        write(&dir.join("loss_history.csv"), &loss_history_csv(&row.history))?;
        write_json(&dir.join("report.json"), row)?;
        eprintln!("{}={}  val {:.6e}  test {:.6e}", report.axis, row.value, row.val_mse, row.test.aggregate.mse);
    }
    write(&common.out.join(format!("sweep_{}.csv", report.axis)), &report.to_csv())?;
    write_json(&common.out.join(format!("sweep_{}.json", report.axis)), &report)
}

fn check_model_keys(cfg: &RunConfig, ck: &ModelConfig) -> Result<(), CliError> {
    let ours: BTreeMap<_, _> = cfg.model.to_entries().into_iter().collect();
    let theirs: BTreeMap<_, _> = ck.to_entries().into_iter().collect();
    for key in &cfg.explicit_model_keys {
        if ours.get(key.as_str()) != theirs.get(key.as_str()) {
            return Err(CliError::Config(format!(
                "model.{key}={} conflicts with the checkpoint's {}",
                ours.get(key.as_str()).map_or("", |s| s.as_str()),
                theirs.get(key.as_str()).map_or("", |s| s.as_str())
            )));
        }
    }
    Ok(())
}

fn cmd_finetune(common: &Common, checkpoint: &Path, data: &Path) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    open_out(&common.out, &cfg)?;
    let (ck, model, norm) = load_checkpoint(checkpoint)?;
    check_model_keys(&cfg, &ck.config)?;
    let ds = load_dataset(data)?;
    // The pretrained normalization is kept so the frozen layers see inputs on the scale they were trained on.
    let prepared = prepare_with(&ds, model.config(), norm.clone())?;
    let ft = fine_tune_head(&model, &prepared, &cfg.train)?;
    log_history(&ft.outcome.history);
    if !ft.frozen_identical {
        return Err(CliError::Numerical("a frozen parameter changed during fine-tuning".into()));
    }
    eprintln!("frozen parameters verified bit-identical; head changed: {}", ft.head_changed);
    let mut meta = ck.meta.clone();
    meta.insert("finetuned_on".into(), ds.name.clone());
    meta.insert("version".into(), VERSION.to_string());
    checkpoint_for(&ft.outcome.model, &norm, meta).save(&common.out.join("model.ckpt"))?;
    write(&common.out.join("loss_history.csv"), &loss_history_csv(&ft.outcome.history))?;
    write_json(
        &common.out.join("report.json"),
        &FinetuneReport {
            version: VERSION,
            frozen_identical: ft.frozen_identical,
            head_changed: ft.head_changed,
            initial_val_loss: ft.outcome.initial_val_loss,
            best_val_loss: ft.outcome.best_val_loss,
            best_epoch: ft.outcome.best_epoch,
            test: &ft.test,
        },
    )
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { common } => cmd_simulate(common),
        Command::Train { common, data, ablation } => cmd_train(common, data, ablation.as_deref()),
        Command::Eval { common, checkpoint, data } => cmd_eval(common, checkpoint, data),
        Command::Ablate { common, data } => cmd_ablate(common, data),
        Command::Sweep { common, data, axis } => cmd_sweep(common, data, axis),
        Command::Finetune { common, checkpoint, data } => cmd_finetune(common, checkpoint, data),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fanet: {e}");
            e.exit_code()
        }
    }
}
