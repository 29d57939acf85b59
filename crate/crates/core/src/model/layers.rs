use std::f64::consts::PI;

use rand::Rng;

use super::params::{HeadWeights, Params, TemporalLayer};
use super::{ModelConfig, ModelError, Result};
use crate::tensor::{Tensor, Var};

/// Synthesis bases of the frequency mapping.
///
/// `w_cos[k][n] = (a_k/L)·cos(2πkn/L)` and `w_sin[k][n] = −(b_k/L)·sin(2πkn/L)`,
/// with `a_0 = a_{L/2} = 1`, `b_0 = b_{L/2} = 0` and `2` elsewhere. They are
/// the real inverse-DFT weights, so `reᵀ·w_cos + imᵀ·w_sin` recovers the
/// input series exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DbfmBases {
    pub w_cos: Tensor,
    pub w_sin: Tensor,
}

impl DbfmBases {
    pub fn new(lookback: usize) -> Result<Self> {
        if lookback < 2 || lookback % 2 != 0 {
            return Err(ModelError::Config(format!(
                "frequency mapping needs an even look-back >= 2, got {lookback}"
            )));
        }
        let l = lookback as f64;
        let bins = lookback / 2 + 1;
        let mut w_cos = Tensor::zeros(&[bins, lookback]);
        let mut w_sin = Tensor::zeros(&[bins, lookback]);
        for k in 0..bins {
            let edge = k == 0 || k == lookback / 2;
            let a = if edge { 1.0 } else { 2.0 };
            let b = if edge { 0.0 } else { 2.0 };
            for n in 0..lookback {
                let arg = 2.0 * PI * ((k * n) % lookback) as f64 / l;
                w_cos.set(k, n, a / l * arg.cos());
                w_sin.set(k, n, -b / l * arg.sin());
            }
        }
        Ok(DbfmBases { w_cos, w_sin })
    }

    pub fn lookback(&self) -> usize {
        self.w_cos.cols()
    }
}

/// `x · E`, applied to every time step.
pub fn value_embedding<'t>(x: Var<'t>, p: &Params<Var<'t>>) -> Result<Var<'t>> {
    x.matmul(p.embed).map_err(|e| ModelError::stage("value embedding", e))
}

/// Sinusoidal encoding `[L × D]`; even columns sine, odd columns cosine.
pub fn position_encoding(lookback: usize, d_model: usize) -> Result<Tensor> {
    if d_model % 2 != 0 {
        return Err(ModelError::Config(format!(
            "position encoding needs an even width, got {d_model}"
        )));
    }
    let mut pe = Tensor::zeros(&[lookback, d_model]);
    for t in 0..lookback {
        for i in 0..d_model / 2 {
            let angle = t as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            pe.set(t, 2 * i, angle.sin());
            pe.set(t, 2 * i + 1, angle.cos());
        }
    }
    Ok(pe)
}

/// Cosine-basis and sine-basis reconstructions `(F_R, F_I)` of every column.
pub fn dbfm_features<'t>(e: Var<'t>, bases: &DbfmBases) -> Result<(Var<'t>, Var<'t>)> {
    let stage = |err| ModelError::stage("frequency mapping", err);
    let shape = e.shape();
    if shape[0] != bases.lookback() {
        return Err(ModelError::Config(format!(
            "embedding has {} steps but the bases were built for {}",
            shape[0],
            bases.lookback()
        )));
    }
    let tape = e.tape();
    let (re, im) = e.rdft().map_err(stage)?;
    let f_r = tape.constant(bases.w_cos.transpose()).matmul(re).map_err(stage)?;
    let f_i = tape.constant(bases.w_sin.transpose()).matmul(im).map_err(stage)?;
    Ok((f_r, f_i))
}

/// One frequency-mapping block: `LN(e + [F_R | F_I] · proj)`.
pub fn dbfm_forward<'t>(
    e: Var<'t>,
    bases: &DbfmBases,
    layer: &TemporalLayer<Var<'t>>,
    eps: f64,
) -> Result<Var<'t>> {
    let stage = |err| ModelError::stage("frequency mapping", err);
    let (f_r, f_i) = dbfm_features(e, bases)?;
    let g = Var::concat_cols(&[f_r, f_i]).map_err(stage)?;
    let mixed = g.matmul(layer.dbfm_proj).map_err(stage)?;
    e.add(mixed)
        .and_then(|s| s.layer_norm(layer.dbfm_ln_gain, layer.dbfm_ln_bias, eps))
        .map_err(stage)
}

/// Inverted dropout: keeps each entry with probability `1 − rate` and
/// rescales survivors by `1 / (1 − rate)`. The mask is a constant on the tape.
pub fn dropout<'t, R: Rng + ?Sized>(v: Var<'t>, rate: f64, rng: &mut R) -> Result<Var<'t>> {
    if rate == 0.0 {
        return Ok(v);
    }
    let shape = v.shape();
    let mask = dropout_mask(&shape, rate, rng);
    v.mul(v.tape().constant(mask))
        .map_err(|e| ModelError::stage("dropout", e))
}

pub fn dropout_mask<R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Tensor {
    let keep = 1.0 - rate;
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("mask shape")
}

/// Multi-head attention core shared by the temporal and cross modules.
///
/// Returns the concatenated head outputs `[rows(q_src) × D]` and each head's
/// row-stochastic weight matrix.
fn multi_head<'t>(
    q_src: Var<'t>,
    kv_src: Var<'t>,
    heads: &[HeadWeights<Var<'t>>],
    scaled: bool,
    stage: &'static str,
) -> Result<(Var<'t>, Vec<Tensor>)> {
    let err = |e| ModelError::stage(stage, e);
    let mut outs = Vec::with_capacity(heads.len());
    let mut weights = Vec::with_capacity(heads.len());
    for h in heads {
        let q = q_src.matmul(h.wq).map_err(err)?;
        let k = kv_src.matmul(h.wk).map_err(err)?;
        let v = kv_src.matmul(h.wv).map_err(err)?;
        let mut scores = q.matmul(k.t()).map_err(err)?;
        if scaled {
            let d = h.wq.shape()[1] as f64;
            scores = scores.scale(1.0 / d.sqrt());
        }
        let a = scores.softmax_rows();
        weights.push(a.to_tensor());
        outs.push(a.matmul(v).map_err(err)?);
    }
    let cat = Var::concat_cols(&outs).map_err(err)?;
    Ok((cat, weights))
}

/// `LN(e + Dropout(Concat(heads) · W_o))` over time steps.
///
/// Returns the block output and the per-head `[L × L]` attention weights.
pub fn temporal_attention<'t, R: Rng + ?Sized>(
    e: Var<'t>,
    layer: &TemporalLayer<Var<'t>>,
    cfg: &ModelConfig,
    dropout_rng: Option<&mut R>,
) -> Result<(Var<'t>, Vec<Tensor>)> {
    let stage = "temporal attention";
    let err = |x| ModelError::stage(stage, x);
    let (cat, weights) = multi_head(e, e, &layer.ta_heads, cfg.scaled_attention, stage)?;
    let mut mixed = cat.matmul(layer.ta_wo).map_err(err)?;
    if let Some(rng) = dropout_rng {
        mixed = dropout(mixed, cfg.dropout, rng)?;
    }
    let out = e
        .add(mixed)
        .and_then(|s| s.layer_norm(layer.ta_ln_gain, layer.ta_ln_bias, cfg.ln_eps))
        .map_err(err)?;
    Ok((out, weights))
}

/// Variate tokens: one `[D]` row per endogenous and per exogenous series.
///
/// With temporal features present the endogenous source is
/// `x + e_out · bridge`; otherwise it is `x` itself.
pub fn variate_tokens<'t>(
    x: Var<'t>,
    z: Var<'t>,
    e_out: Option<Var<'t>>,
    p: &Params<Var<'t>>,
) -> Result<(Var<'t>, Var<'t>)> {
    let err = |e| ModelError::stage("variate embedding", e);
    let source = match e_out {
        Some(e) => x.add(e.matmul(p.bridge).map_err(err)?).map_err(err)?,
        None => x,
    };
    let v_en = source.t().matmul(p.en_variate_embed).map_err(err)?;
    let v_ex = z.t().matmul(p.ex_variate_embed).map_err(err)?;
    Ok((v_en, v_ex))
}

/// Endogenous tokens attend to exogenous tokens; `LN(v_en + Concat(heads)·W_o)`.
///
/// Also returns the head-averaged `[F × C]` attention matrix.
pub fn cross_attention<'t>(
    v_en: Var<'t>,
    v_ex: Var<'t>,
    p: &Params<Var<'t>>,
    cfg: &ModelConfig,
) -> Result<(Var<'t>, Tensor)> {
    let stage = "cross attention";
    let err = |e| ModelError::stage(stage, e);
    if v_ex.shape()[0] == 0 {
        return Err(ModelError::Config("cross attention needs at least one exogenous token".into()));
    }
    let (cat, weights) = multi_head(v_en, v_ex, &p.ca_heads, cfg.scaled_attention, stage)?;
    let attended = cat.matmul(p.ca_wo).map_err(err)?;
    let out = v_en
        .add(attended)
        .and_then(|s| s.layer_norm(p.ca_ln_gain, p.ca_ln_bias, cfg.ln_eps))
        .map_err(err)?;
    let mut avg = Tensor::zeros(weights[0].shape());
    let n = weights.len() as f64;
    for w in &weights {
        for (a, b) in avg.data_mut().iter_mut().zip(w.data()) {
            *a += b / n;
        }
    }
    Ok((out, avg))
}

/// Mean squared error over the target rows of `[F × H]` predictions.
pub fn mse_loss<'t>(yhat: Var<'t>, y: Var<'t>, targets: &[usize]) -> Result<Var<'t>> {
    if targets.is_empty() {
        return Err(ModelError::Config("loss needs at least one target row".into()));
    }
    let err = |e| ModelError::stage("loss", e);
    let d = yhat
        .select_rows(targets)
        .and_then(|a| y.select_rows(targets).and_then(|b| a.sub(b)))
        .map_err(err)?;
    Ok(d.mul(d).map_err(err)?.mean())
}
