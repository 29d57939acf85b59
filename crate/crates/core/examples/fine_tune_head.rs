//! Pretrains on one sea state, then retrains only the output head on a
//! milder one and checks that nothing else moved.
//!
//! `cargo run --release --example fine_tune_head -- [duration_s] [max_epochs]`

use fanet::model::{Model, ModelConfig};
use fanet::sim::{generate_dataset, FlumeConfig};
use fanet::train::{evaluate, fine_tune_head, prepare, prepare_with, run_single, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let duration: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(200.0);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);

    let mut source = FlumeConfig::default();
    source.sim.duration = duration;
    let mut target = source.clone();
    target.wave.hs = 0.12;
    target.wave.tp = 1.6;
    target.wave.seed = 1;

    let tcfg = TrainConfig { max_epochs: epochs, patience: Some(epochs.min(3)), ..Default::default() };
    let mcfg = ModelConfig::default();
    let src = prepare(&generate_dataset(&source)?, &mcfg, true)?;
    let pretrained: Model = run_single(&src, &mcfg, &tcfg)?.outcome.model;

    // The target data is scaled with the source statistics the frozen layers were trained on.
    let dst = prepare_with(&generate_dataset(&target)?, &mcfg, src.normalizer.clone())?;
    let before = evaluate(&pretrained, &dst.view, &dst.test, &dst.normalizer)?;
    let ft = fine_tune_head(&pretrained, &dst, &tcfg)?;
    println!("target test MSE before {:.4e}, after {:.4e}", before.aggregate.mse, ft.test.aggregate.mse);
    println!("frozen slots identical: {}, head changed: {}", ft.frozen_identical, ft.head_changed);
    Ok(())
}
