//! Trains the four module combinations on one dataset and prints a
//! comparison table of test metrics and best validation loss.
//!
//! `cargo run --release --example ablation_study -- [dataset.csv] [max_epochs] [seed]`

use std::path::Path;

use fanet::data::Dataset;
use fanet::model::ModelConfig;
use fanet::sim::{generate_dataset, FlumeConfig};
use fanet::train::{run_ablation, TrainConfig};

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
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    tcfg.seed = seed;
    let mcfg = ModelConfig { seed, ..ModelConfig::default() };
    let report = run_ablation(&ds, &mcfg, &tcfg)?;
    println!("{:<12} {:>11} {:>11} {:>11}", "config", "val MSE", "test MSE", "test MAE");
    for r in &report.rows {
        println!(
            "{:<12} {:>11.4e} {:>11.4e} {:>11.4e}",
            r.config, r.val_mse, r.test.aggregate.mse, r.test.aggregate.mae
        );
    }
    println!("{:<12} {:>11} {:>11.4e} {:>11.4e}", "persistence", "", report.baseline.aggregate.mse, report.baseline.aggregate.mae);
    Ok(())
}
