use rand::Rng;

use super::{ModelConfig, ModelError};
use crate::rng::rng_for;
use crate::tensor::{Gradients, Tape, Tensor, Var};

/// Query/key/value projections of one attention head, each `[D × d_head]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights<T> {
    pub wq: T,
    pub wk: T,
    pub wv: T,
}

/// Weights of one frequency-mapping + temporal-attention block.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalLayer<T> {
    /// `[2D × D]`, maps the concatenated cosine/sine features back to width D.
    pub dbfm_proj: T,
    pub dbfm_ln_gain: T,
    pub dbfm_ln_bias: T,
    pub ta_heads: Vec<HeadWeights<T>>,
    /// `[D × D]`
    pub ta_wo: T,
    pub ta_ln_gain: T,
    pub ta_ln_bias: T,
}

/// Every learnable array of the network.
///
/// Generic over the slot type so the same layout carries values
/// (`Params<Tensor>`), tape handles (`Params<Var>`), gradients and optimizer
/// moments. Traversal order is fixed and defines checkpoint order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    /// `[F × D]` value embedding.
    pub embed: T,
    pub layers: Vec<TemporalLayer<T>>,
    /// `[D × F]`, projects temporal features back onto the physical variates.
    pub bridge: T,
    /// `[L × D]`
    pub en_variate_embed: T,
    /// `[L × D]`
    pub ex_variate_embed: T,
    pub ca_heads: Vec<HeadWeights<T>>,
    /// `[D × D]`
    pub ca_wo: T,
    pub ca_ln_gain: T,
    pub ca_ln_bias: T,
    /// `[D × H]`
    pub head: T,
    /// `[H]`
    pub head_bias: T,
}

pub type ModelParams = Params<Tensor>;

fn map_heads<T, U>(
    prefix: &str,
    heads: &[HeadWeights<T>],
    f: &mut impl FnMut(&str, &T) -> U,
) -> Vec<HeadWeights<U>> {
    heads
        .iter()
        .enumerate()
        .map(|(h, w)| HeadWeights {
            wq: f(&format!("{prefix}.{h}.wq"), &w.wq),
            wk: f(&format!("{prefix}.{h}.wk"), &w.wk),
            wv: f(&format!("{prefix}.{h}.wv"), &w.wv),
        })
        .collect()
}

fn for_heads_mut<T>(prefix: &str, heads: &mut [HeadWeights<T>], f: &mut impl FnMut(&str, &mut T)) {
    for (h, w) in heads.iter_mut().enumerate() {
        f(&format!("{prefix}.{h}.wq"), &mut w.wq);
        f(&format!("{prefix}.{h}.wk"), &mut w.wk);
        f(&format!("{prefix}.{h}.wv"), &mut w.wv);
    }
}

impl<T> Params<T> {
    /// Structure-preserving map that also passes each slot's name.
    pub fn map_named<U>(&self, mut f: impl FnMut(&str, &T) -> U) -> Params<U> {
        let embed = f("embed", &self.embed);
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| TemporalLayer {
                dbfm_proj: f(&format!("layers.{i}.dbfm_proj"), &l.dbfm_proj),
                dbfm_ln_gain: f(&format!("layers.{i}.dbfm_ln_gain"), &l.dbfm_ln_gain),
                dbfm_ln_bias: f(&format!("layers.{i}.dbfm_ln_bias"), &l.dbfm_ln_bias),
                ta_heads: map_heads(&format!("layers.{i}.ta_heads"), &l.ta_heads, &mut f),
                ta_wo: f(&format!("layers.{i}.ta_wo"), &l.ta_wo),
                ta_ln_gain: f(&format!("layers.{i}.ta_ln_gain"), &l.ta_ln_gain),
                ta_ln_bias: f(&format!("layers.{i}.ta_ln_bias"), &l.ta_ln_bias),
            })
            .collect();
        Params {
            embed,
            layers,
            bridge: f("bridge", &self.bridge),
            en_variate_embed: f("en_variate_embed", &self.en_variate_embed),
            ex_variate_embed: f("ex_variate_embed", &self.ex_variate_embed),
            ca_heads: map_heads("ca_heads", &self.ca_heads, &mut f),
            ca_wo: f("ca_wo", &self.ca_wo),
            ca_ln_gain: f("ca_ln_gain", &self.ca_ln_gain),
            ca_ln_bias: f("ca_ln_bias", &self.ca_ln_bias),
            head: f("head", &self.head),
            head_bias: f("head_bias", &self.head_bias),
        }
    }

    /// Visits every slot in the same order as [`Params::map_named`].
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&str, &mut T)) {
        f("embed", &mut self.embed);
        for (i, l) in self.layers.iter_mut().enumerate() {
            f(&format!("layers.{i}.dbfm_proj"), &mut l.dbfm_proj);
            f(&format!("layers.{i}.dbfm_ln_gain"), &mut l.dbfm_ln_gain);
            f(&format!("layers.{i}.dbfm_ln_bias"), &mut l.dbfm_ln_bias);
            for_heads_mut(&format!("layers.{i}.ta_heads"), &mut l.ta_heads, &mut f);
            f(&format!("layers.{i}.ta_wo"), &mut l.ta_wo);
            f(&format!("layers.{i}.ta_ln_gain"), &mut l.ta_ln_gain);
            f(&format!("layers.{i}.ta_ln_bias"), &mut l.ta_ln_bias);
        }
        f("bridge", &mut self.bridge);
        f("en_variate_embed", &mut self.en_variate_embed);
        f("ex_variate_embed", &mut self.ex_variate_embed);
        for_heads_mut("ca_heads", &mut self.ca_heads, &mut f);
        f("ca_wo", &mut self.ca_wo);
        f("ca_ln_gain", &mut self.ca_ln_gain);
        f("ca_ln_bias", &mut self.ca_ln_bias);
        f("head", &mut self.head);
        f("head_bias", &mut self.head_bias);
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.map_named(|n, _| out.push(n.to_string()));
        out
    }

    pub fn entries(&self) -> Vec<(String, &T)> {
        let mut out = Vec::new();
        self.map_named(|n, _| out.push(n.to_string()));
        let mut refs = Vec::new();
        collect_refs(self, &mut refs);
        out.into_iter().zip(refs).collect()
    }
}

fn collect_refs<'a, T>(p: &'a Params<T>, out: &mut Vec<&'a T>) {
    out.push(&p.embed);
    for l in &p.layers {
        out.push(&l.dbfm_proj);
        out.push(&l.dbfm_ln_gain);
        out.push(&l.dbfm_ln_bias);
        for h in &l.ta_heads {
            out.extend([&h.wq, &h.wk, &h.wv]);
        }
        out.push(&l.ta_wo);
        out.push(&l.ta_ln_gain);
        out.push(&l.ta_ln_bias);
    }
    out.extend([&p.bridge, &p.en_variate_embed, &p.ex_variate_embed]);
    for h in &p.ca_heads {
        out.extend([&h.wq, &h.wk, &h.wv]);
    }
    out.extend([&p.ca_wo, &p.ca_ln_gain, &p.ca_ln_bias, &p.head, &p.head_bias]);
}

/// Expected shape of every slot for a configuration.
pub fn param_shapes(cfg: &ModelConfig) -> Params<Vec<usize>> {
    let (d, dh) = (cfg.d_model, cfg.d_head);
    let heads = || {
        (0..cfg.n_heads)
            .map(|_| HeadWeights {
                wq: vec![d, dh],
                wk: vec![d, dh],
                wv: vec![d, dh],
            })
            .collect::<Vec<_>>()
    };
    Params {
        embed: vec![cfg.n_endo, d],
        layers: (0..cfg.n_layers)
            .map(|_| TemporalLayer {
                dbfm_proj: vec![2 * d, d],
                dbfm_ln_gain: vec![d],
                dbfm_ln_bias: vec![d],
                ta_heads: heads(),
                ta_wo: vec![d, d],
                ta_ln_gain: vec![d],
                ta_ln_bias: vec![d],
            })
            .collect(),
        bridge: vec![d, cfg.n_endo],
        en_variate_embed: vec![cfg.lookback, d],
        ex_variate_embed: vec![cfg.lookback, d],
        ca_heads: heads(),
        ca_wo: vec![d, d],
        ca_ln_gain: vec![d],
        ca_ln_bias: vec![d],
        head: vec![d, cfg.horizon],
        head_bias: vec![cfg.horizon],
    }
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))` for a matrix shape.
pub fn init_bound(shape: &[usize]) -> f64 {
    (6.0 / (shape[0] + shape[1]) as f64).sqrt()
}

/// Seeded initialization: matrices uniform in ±Glorot bound, biases zero,
/// layer-norm gains one.
pub fn init_params(cfg: &ModelConfig) -> Result<ModelParams, ModelError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, "init");
    Ok(param_shapes(cfg).map_named(|name, shape| {
        if shape.len() == 2 {
            let b = init_bound(shape);
            let data = (0..shape[0] * shape[1]).map(|_| rng.gen_range(-b..b)).collect();
            Tensor::new(shape.clone(), data).expect("init shape")
        } else if name.ends_with("_gain") {
            Tensor::filled(shape, 1.0)
        } else {
            Tensor::zeros(shape)
        }
    }))
}

impl ModelParams {
    pub fn num_values(&self) -> usize {
        self.entries().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        let want = param_shapes(cfg);
        if want.layers.len() != self.layers.len()
            || want.ca_heads.len() != self.ca_heads.len()
            || self.layers.iter().any(|l| l.ta_heads.len() != cfg.n_heads)
        {
            return Err(ModelError::Config(
                "parameter layout does not match the configuration".into(),
            ));
        }
        for ((name, t), (_, s)) in self.entries().into_iter().zip(want.entries()) {
            if t.shape() != s.as_slice() {
                return Err(ModelError::Config(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    t.shape(),
                    s
                )));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|(_, t)| t.is_finite())
    }

    /// Records every slot on the tape as a trainable leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> Params<Var<'t>> {
        self.map_named(|_, t| tape.param(t.clone()))
    }

    /// Records every slot as a constant.
    pub fn bind_constant<'t>(&self, tape: &'t Tape) -> Params<Var<'t>> {
        self.map_named(|_, t| tape.constant(t.clone()))
    }

    /// All values concatenated in traversal order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_values());
        for (_, t) in self.entries() {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Inverse of [`ModelParams::flatten`] using `self` as the layout template.
    pub fn unflatten(&self, flat: &[f64]) -> Result<ModelParams, ModelError> {
        if flat.len() != self.num_values() {
            return Err(ModelError::Config(format!(
                "flat length {} does not match {} parameters",
                flat.len(),
                self.num_values()
            )));
        }
        let mut offset = 0;
        Ok(self.map_named(|_, t| {
            let n = t.len();
            let out = Tensor::new(t.shape().to_vec(), flat[offset..offset + n].to_vec()).expect("unflatten");
            offset += n;
            out
        }))
    }

    pub fn zeros_like(&self) -> ModelParams {
        self.map_named(|_, t| Tensor::zeros(t.shape()))
    }
}

impl<'t> Params<Var<'t>> {
    /// Collects the gradient of every slot; untouched slots get zeros.
    pub fn gradients(&self, grads: &mut Gradients) -> ModelParams {
        self.map_named(|_, v| {
            grads
                .take(*v)
                .unwrap_or_else(|| Tensor::zeros(&v.shape()))
        })
    }
}
