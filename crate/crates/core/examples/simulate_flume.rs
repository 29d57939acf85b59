//! Runs the default flume and prints summary statistics per channel.
//!
//! `cargo run --release --example simulate_flume -- [duration_s] [out.csv]`

use std::time::Instant;

use fanet::data::CHANNELS;
use fanet::sim::{generate_dataset, FlumeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut cfg = FlumeConfig::default();
    if let Some(d) = args.next() {
        cfg.sim.duration = d.parse()?;
    }
    let start = Instant::now();
    let ds = generate_dataset(&cfg)?;
    println!("{} rows in {:.1} s", ds.len(), start.elapsed().as_secs_f64());
    for (c, name) in CHANNELS.iter().enumerate() {
        let col = ds.channels.column(c);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{name:>6}  mean {mean:+.4e}  std {std:.4e}  peak {peak:.4e}");
    }
    if let Some(path) = args.next() {
        ds.save_csv(std::path::Path::new(&path))?;
        std::fs::write(std::path::Path::new(&path).with_extension("meta"), cfg.metadata())?;
        println!("wrote {path}");
    }
    Ok(())
}
