//! The forecasting network.
//!
//! Pipeline for one window (`x: [L × F]` endogenous, `z: [L × C]` exogenous):
//!
//! 1. value embedding plus sinusoidal position encoding, `[L × D]`;
//! 2. `n_layers` blocks of frequency mapping then temporal attention;
//! 3. per-variate tokens, with temporal features bridged back onto the
//!    endogenous series;
//! 4. endogenous-query / exogenous-key cross-attention;
//! 5. a shared linear head emitting all `H` steps per variate, `[F × H]`.
//!
//! Steps 1–2 are skipped entirely when both the frequency mapping and the
//! temporal attention are switched off.

mod checkpoint;
mod config;
mod layers;
mod params;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use config::{Ablation, ModelConfig};
pub use layers::{
    cross_attention, dbfm_features, dbfm_forward, dropout, dropout_mask, mse_loss,
    position_encoding, temporal_attention, value_embedding, variate_tokens, DbfmBases,
};
pub use params::{
    init_bound, init_params, param_shapes, HeadWeights, ModelParams, Params, TemporalLayer,
};

use rand::Rng;
use thiserror::Error;

use crate::tensor::{Tape, Tensor, TensorError, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Tensor {
        stage: &'static str,
        #[source]
        source: TensorError,
    },
}

impl ModelError {
    pub(crate) fn stage(stage: &'static str, source: TensorError) -> Self {
        ModelError::Tensor { stage, source }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Forward-pass products besides the prediction.
pub struct ForwardOutput<'t> {
    /// `[F × H]`
    pub yhat: Var<'t>,
    /// Head-averaged `[F × C]` cross-attention weights.
    pub cross_attention: Tensor,
    /// Per layer, per head `[L × L]` temporal attention weights.
    pub temporal_attention: Vec<Vec<Tensor>>,
}

/// Configuration-dependent constants (bases and position encoding).
#[derive(Debug, Clone)]
pub struct Network {
    cfg: ModelConfig,
    bases: DbfmBases,
    pe: Tensor,
}

impl Network {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Network {
            cfg: cfg.clone(),
            bases: DbfmBases::new(cfg.lookback)?,
            pe: position_encoding(cfg.lookback, cfg.d_model)?,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn bases(&self) -> &DbfmBases {
        &self.bases
    }

    /// Runs the network on one window. Dropout is applied only when an RNG
    /// is supplied.
    pub fn forward<'t, R: Rng + ?Sized>(
        &self,
        x: Var<'t>,
        z: Var<'t>,
        p: &Params<Var<'t>>,
        mut dropout_rng: Option<&mut R>,
    ) -> Result<ForwardOutput<'t>> {
        let cfg = &self.cfg;
        let (xs, zs) = (x.shape(), z.shape());
        if xs != [cfg.lookback, cfg.n_endo] || zs != [cfg.lookback, cfg.n_exo] {
            return Err(ModelError::stage(
                "input",
                TensorError::Dimension {
                    op: "forward",
                    lhs: xs,
                    rhs: zs,
                },
            ));
        }
        let mut ta_weights = Vec::new();
        let e_out = if cfg.temporal_branch() {
            let tape = x.tape();
            let mut e = value_embedding(x, p)?
                .add(tape.constant(self.pe.clone()))
                .map_err(|e| ModelError::stage("position encoding", e))?;
            for layer in &p.layers {
                if cfg.enable_dbfm {
                    e = dbfm_forward(e, &self.bases, layer, cfg.ln_eps)?;
                }
                if cfg.enable_ta {
                    let (out, w) = temporal_attention(e, layer, cfg, dropout_rng.as_deref_mut())?;
                    e = out;
                    ta_weights.push(w);
                }
            }
            Some(e)
        } else {
            None
        };
        let (v_en, v_ex) = variate_tokens(x, z, e_out, p)?;
        let (mut u, cross) = cross_attention(v_en, v_ex, p, cfg)?;
        if let Some(rng) = dropout_rng {
            u = dropout(u, cfg.dropout, rng)?;
        }
        let yhat = u
            .matmul(p.head)
            .and_then(|h| h.add_row(p.head_bias))
            .map_err(|e| ModelError::stage("output head", e))?;
        Ok(ForwardOutput {
            yhat,
            cross_attention: cross,
            temporal_attention: ta_weights,
        })
    }
}

/// Inference-only prediction for one window.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// `[F × H]`
    pub yhat: Tensor,
    /// `[F × C]`
    pub cross_attention: Tensor,
}

/// A configuration bundled with its parameters.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    net: Network,
}

impl Model {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        Ok(Model {
            params: init_params(cfg)?,
            net: Network::new(cfg)?,
        })
    }

    pub fn from_parts(cfg: &ModelConfig, params: ModelParams) -> Result<Self> {
        let net = Network::new(cfg)?;
        params.check_shapes(cfg)?;
        Ok(Model { params, net })
    }

    pub fn config(&self) -> &ModelConfig {
        self.net.config()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn predict(&self, x: &Tensor, z: &Tensor) -> Result<Prediction> {
        let tape = Tape::new();
        let p = self.params.bind_constant(&tape);
        let out = self.net.forward::<rand_chacha::ChaCha8Rng>(
            tape.constant(x.clone()),
            tape.constant(z.clone()),
            &p,
            None,
        )?;
        Ok(Prediction {
            yhat: out.yhat.to_tensor(),
            cross_attention: out.cross_attention,
        })
    }
}

#[cfg(test)]
mod tests;
