//! Splits a two-tone wave record into its cosine and sine frequency parts and
//! shows that the two parts add back to the input.
//!
//! `cargo run --release --example dbfm_reconstruction -- [lookback]`

use std::f64::consts::PI;

use fanet::model::{dbfm_features, DbfmBases};
use fanet::tensor::{rdft_values, Tape, Tensor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let l: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(48);
    let dt = 0.05;
    // A 2 s swell plus a weaker, phase-shifted 0.8 s chop.
    let x: Vec<f64> = (0..l)
        .map(|i| {
            let t = i as f64 * dt;
            0.09 * (2.0 * PI * t / 2.0).cos() + 0.03 * (2.0 * PI * t / 0.8 + 1.0).sin()
        })
        .collect();

    let bases = DbfmBases::new(l)?;
    let tape = Tape::new();
    let (f_r, f_i) = dbfm_features(tape.constant(Tensor::new(vec![l, 1], x.clone())?), &bases)?;
    let (f_r, f_i) = (f_r.to_tensor(), f_i.to_tensor());

    let (re, im) = rdft_values(&x)?;
    // The window is not a whole number of periods, so only the dominant bins are listed.
    let peak = re.iter().chain(&im).fold(0.0f64, |m, v| m.max(v.abs()));
    println!("bin  freq[Hz]   |Re|       |Im|");
    for k in 0..re.len() {
        if re[k].abs().max(im[k].abs()) > 0.25 * peak {
            println!("{k:>3}  {:>7.3}  {:>9.4}  {:>9.4}", k as f64 / (l as f64 * dt), re[k].abs(), im[k].abs());
        }
    }

    let err = (0..l).map(|i| (f_r.data()[i] + f_i.data()[i] - x[i]).abs()).fold(0.0, f64::max);
    let energy = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    println!("cosine part energy {:.5}, sine part energy {:.5}", energy(f_r.data()), energy(f_i.data()));
    println!("max |F_R + F_I - x| = {err:.2e}");
    Ok(())
}
