use std::fmt;
use std::str::FromStr;

use super::ModelError;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Look-back window length `L` (even).
    pub lookback: usize,
    /// Forecast horizon `H`.
    pub horizon: usize,
    /// Endogenous variate count `F`.
    pub n_endo: usize,
    /// Exogenous variate count `C`.
    pub n_exo: usize,
    /// Embedding width `D`.
    pub d_model: usize,
    pub n_heads: usize,
    pub d_head: usize,
    /// Number of stacked frequency-mapping / temporal-attention blocks.
    pub n_layers: usize,
    pub dropout: f64,
    pub enable_dbfm: bool,
    pub enable_ta: bool,
    /// Always true; kept so checkpoints and reports record the full toggle set.
    pub enable_e2eca: bool,
    /// Divide attention logits by `sqrt(d_head)`. Off by default: logits are raw dot products.
    pub scaled_attention: bool,
    /// Endogenous rows that enter the loss and the metrics.
    pub target_indices: Vec<usize>,
    pub seed: u64,
    pub ln_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lookback: 48,
            horizon: 48,
            n_endo: 9,
            n_exo: 3,
            d_model: 16,
            n_heads: 2,
            d_head: 8,
            n_layers: 2,
            dropout: 0.1,
            enable_dbfm: true,
            enable_ta: true,
            enable_e2eca: true,
            scaled_attention: false,
            target_indices: vec![5, 6, 7, 8],
            seed: 0,
            ln_eps: 1e-5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if self.n_heads == 0 || self.d_head == 0 || self.n_heads * self.d_head != self.d_model {
            return bad(format!(
                "n_heads ({}) * d_head ({}) must equal d_model ({})",
                self.n_heads, self.d_head, self.d_model
            ));
        }
        if self.lookback < 2 || self.lookback % 2 != 0 {
            return bad(format!("lookback must be even and >= 2, got {}", self.lookback));
        }
        if self.d_model % 2 != 0 {
            return bad(format!("d_model must be even for the position encoding, got {}", self.d_model));
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.n_endo == 0 {
            return bad("at least one endogenous variate is required".into());
        }
        if self.n_exo == 0 {
            return bad("at least one exogenous variate is required for cross-attention".into());
        }
        if self.n_layers == 0 && (self.enable_dbfm || self.enable_ta) {
            return bad("n_layers must be >= 1 when the temporal branch is enabled".into());
        }
        if self.target_indices.is_empty() {
            return bad("target_indices must not be empty".into());
        }
        if let Some(&t) = self.target_indices.iter().find(|&&t| t >= self.n_endo) {
            return bad(format!("target index {t} out of range for {} endogenous variates", self.n_endo));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !self.enable_e2eca {
            return bad("the cross-attention module cannot be disabled".into());
        }
        if self.ln_eps <= 0.0 {
            return bad(format!("ln_eps must be > 0, got {}", self.ln_eps));
        }
        Ok(())
    }

    pub fn temporal_branch(&self) -> bool {
        self.enable_dbfm || self.enable_ta
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        let (dbfm, ta) = ablation.toggles();
        self.enable_dbfm = dbfm;
        self.enable_ta = ta;
        self
    }

    pub fn ablation(&self) -> Ablation {
        match (self.enable_dbfm, self.enable_ta) {
            (false, false) => Ablation::E2eca,
            (false, true) => Ablation::TaE2eca,
            (true, false) => Ablation::DbfmE2eca,
            (true, true) => Ablation::Full,
        }
    }

    /// Short description used to tag reports.
    pub fn fingerprint(&self) -> String {
        format!(
            "ablation={};lookback={};horizon={};n_endo={};n_exo={};d_model={};n_heads={};n_layers={};dropout={};scaled={};targets={};seed={}",
            self.ablation(),
            self.lookback,
            self.horizon,
            self.n_endo,
            self.n_exo,
            self.d_model,
            self.n_heads,
            self.n_layers,
            self.dropout,
            self.scaled_attention,
            self.target_indices
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("+"),
            self.seed,
        )
    }
}

/// Parses a boolean written as `true`/`false`/`1`/`0`.
pub(crate) fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got '{value}'")),
    }
}

pub(crate) fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse '{value}'"))
}

pub(crate) fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

pub(crate) fn join_list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl ModelConfig {
    /// Every field as `(key, value)` text, in a fixed order.
    pub fn to_entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lookback", self.lookback.to_string()),
            ("horizon", self.horizon.to_string()),
            ("n_endo", self.n_endo.to_string()),
            ("n_exo", self.n_exo.to_string()),
            ("d_model", self.d_model.to_string()),
            ("n_heads", self.n_heads.to_string()),
            ("d_head", self.d_head.to_string()),
            ("n_layers", self.n_layers.to_string()),
            ("dropout", self.dropout.to_string()),
            ("enable_dbfm", self.enable_dbfm.to_string()),
            ("enable_ta", self.enable_ta.to_string()),
            ("enable_e2eca", self.enable_e2eca.to_string()),
            ("scaled_attention", self.scaled_attention.to_string()),
            ("target_indices", join_list(&self.target_indices)),
            ("seed", self.seed.to_string()),
            ("ln_eps", self.ln_eps.to_string()),
        ]
    }

    /// Sets one field from text. Unknown keys are rejected.
    pub fn set_entry(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "lookback" => self.lookback = parse_num(key, value)?,
            "horizon" => self.horizon = parse_num(key, value)?,
            "n_endo" => self.n_endo = parse_num(key, value)?,
            "n_exo" => self.n_exo = parse_num(key, value)?,
            "d_model" => self.d_model = parse_num(key, value)?,
            "n_heads" => self.n_heads = parse_num(key, value)?,
            "d_head" => self.d_head = parse_num(key, value)?,
            "n_layers" => self.n_layers = parse_num(key, value)?,
            "dropout" => self.dropout = parse_num(key, value)?,
            "enable_dbfm" => self.enable_dbfm = parse_bool(key, value)?,
            "enable_ta" => self.enable_ta = parse_bool(key, value)?,
            "enable_e2eca" => self.enable_e2eca = parse_bool(key, value)?,
            "scaled_attention" => self.scaled_attention = parse_bool(key, value)?,
            "target_indices" => self.target_indices = parse_list(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "ln_eps" => self.ln_eps = parse_num(key, value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }
}

/// The four module combinations compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ablation {
    E2eca,
    TaE2eca,
    DbfmE2eca,
    Full,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::E2eca,
        Ablation::TaE2eca,
        Ablation::DbfmE2eca,
        Ablation::Full,
    ];

    /// `(enable_dbfm, enable_ta)`
    pub fn toggles(self) -> (bool, bool) {
        match self {
            Ablation::E2eca => (false, false),
            Ablation::TaE2eca => (false, true),
            Ablation::DbfmE2eca => (true, false),
            Ablation::Full => (true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::E2eca => "e2eca",
            Ablation::TaE2eca => "ta-e2eca",
            Ablation::DbfmE2eca => "dbfm-e2eca",
            Ablation::Full => "full",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                ModelError::Config(format!(
                    "unknown ablation '{s}' (expected e2eca, ta-e2eca, dbfm-e2eca or full)"
                ))
            })
    }
}
