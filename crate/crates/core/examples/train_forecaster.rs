//! Simulates the default flume (or loads a dataset CSV), trains the full
//! model and compares it with the persistence baseline on the test split.
//!
//! `cargo run --release --example train_forecaster -- [dataset.csv] [max_epochs]`

use std::path::Path;
use std::time::Instant;

use fanet::data::Dataset;
use fanet::model::ModelConfig;
use fanet::sim::{generate_dataset, FlumeConfig};
use fanet::train::{prepare, run_single, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let ds = match args.next().filter(|a| a != "-") {
        Some(path) => Dataset::load_csv(Path::new(&path))?,
        None => generate_dataset(&FlumeConfig::default())?,
    };
    let mut tcfg = TrainConfig::default();
    if let Some(e) = args.next() {
        tcfg.max_epochs = e.parse()?;
        tcfg.patience = tcfg.patience.map(|p| p.min(tcfg.max_epochs));
    }
    let mcfg = ModelConfig::default();
    let prepared = prepare(&ds, &mcfg, tcfg.normalize)?;
    println!(
        "{} rows: {} train / {} val / {} test windows",
        ds.len(),
        prepared.train.len(),
        prepared.val.len(),
        prepared.test.len()
    );
    let start = Instant::now();
    let run = run_single(&prepared, &mcfg, &tcfg)?;
    for r in &run.outcome.history {
        println!("epoch {:>2}  train {:.5}  val {:.5}", r.epoch, r.train_loss, r.val_loss);
    }
    println!("trained in {:.1} s, best epoch {}", start.elapsed().as_secs_f64(), run.outcome.best_epoch);
    println!("model       test MSE {:.4e}  MAE {:.4e}", run.test.aggregate.mse, run.test.aggregate.mae);
    println!("persistence test MSE {:.4e}  MAE {:.4e}", run.baseline.aggregate.mse, run.baseline.aggregate.mae);
    Ok(())
}
