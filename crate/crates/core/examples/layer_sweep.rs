//! Trains once per stacked-layer count (or exogenous-input count) and prints
//! test errors side by side.
//!
//! `cargo run --release --example layer_sweep -- [dataset.csv|-] [layers|exo] [max_epochs]`

use std::path::Path;

use fanet::data::Dataset;
use fanet::model::ModelConfig;
use fanet::sim::{generate_dataset, FlumeConfig};
use fanet::train::{run_sweep, SweepAxis, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let ds = match args.next().filter(|a| a != "-") {
        Some(path) => Dataset::load_csv(Path::new(&path))?,
        None => generate_dataset(&FlumeConfig::default())?,
    };
    let axis_name = args.next().unwrap_or_else(|| "layers".into());
    let axis = SweepAxis::parse(&axis_name).ok_or(format!("unknown axis '{axis_name}'"))?;
    let mut tcfg = TrainConfig::default();
    if let Some(e) = args.next() {
        tcfg.max_epochs = e.parse()?;
        tcfg.patience = tcfg.patience.map(|p| p.min(tcfg.max_epochs));
    }
    let report = run_sweep(&ds, &ModelConfig::default(), &tcfg, axis)?;
    println!("{:>6}  {:>10}  {:>10}  {:>10}  best epoch", report.axis, "val MSE", "test MSE", "test MAE");
    for r in &report.rows {
        println!(
            "{:>6}  {:>10.4e}  {:>10.4e}  {:>10.4e}  {}",
            r.value, r.val_mse, r.test.aggregate.mse, r.test.aggregate.mae, r.best_epoch
        );
    }
    Ok(())
}
