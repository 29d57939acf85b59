//! Compares reverse-mode gradients with central differences on a small
//! attention-shaped expression, then on one deliberately wrong tolerance.
//!
//! `cargo run --release --example gradient_check`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fanet::tensor::{gradient_check, Tape, Tensor, Var};

fn attention_like<'t>(tape: &'t Tape, x: Var<'t>) -> fanet::tensor::Result<Var<'t>> {
    let d = x.shape()[1];
    let gain = tape.constant(Tensor::filled(&[d], 1.0));
    let bias = tape.constant(Tensor::zeros(&[d]));
    let h = x.layer_norm(gain, bias, 1e-5)?;
    let scores = h.matmul(h.t())?.scale(1.0 / (d as f64).sqrt());
    let mixed = scores.softmax_rows().matmul(x)?;
    Ok(mixed.mul(mixed)?.mean())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Tensor::new(vec![6, 4], (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    for h in [1e-3, 1e-5, 1e-7] {
        let r = gradient_check(attention_like, &x, h, 1e-6)?;
        println!("h = {h:.0e}: max relative error {:.3e} at element {} ({})", r.max_rel_err, r.worst_index, if r.pass { "pass" } else { "fail" });
    }
    let strict = gradient_check(attention_like, &x, 1e-5, 0.0)?;
    println!("zero tolerance reports pass = {}", strict.pass);
    Ok(())
}
