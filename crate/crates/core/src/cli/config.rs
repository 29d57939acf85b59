//! Flat `section.key=value` run configuration.
//!
//! One `seed` drives every generator. Blank lines and `#` comments are
//! ignored; unknown and repeated keys are errors.

use std::collections::BTreeSet;

use crate::model::ModelConfig;
use crate::sim::FlumeConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub flume: FlumeConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// `model.*` keys written explicitly in the file.
    pub explicit_model_keys: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            seed: 0,
            flume: FlumeConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            explicit_model_keys: BTreeSet::new(),
        };
        cfg.resolve();
        cfg
    }
}

/// Model keys owned by another section.
const TIED_MODEL_KEYS: [&str; 2] = ["seed", "dropout"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(format!("line {}: key '{key}' is set twice", i + 1));
            }
            cfg.set(key, value).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        cfg.resolve();
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if key == "seed" {
            self.seed = value.parse().map_err(|_| format!("seed: cannot parse '{value}'"))?;
            return Ok(());
        }
        if let Some(k) = key.strip_prefix("model.") {
            if TIED_MODEL_KEYS.contains(&k) {
                return Err(format!("unknown key '{key}' (set 'seed' or 'train.dropout' instead)"));
            }
            self.model.set_entry(k, value).map_err(|e| {
                if e.starts_with("unknown key") {
                    format!("unknown key '{key}'")
                } else {
                    format!("model.{e}")
                }
            })?;
            self.explicit_model_keys.insert(k.to_string());
            return Ok(());
        }
        if let Some(k) = key.strip_prefix("train.") {
            return self.train.set_entry(k, value).map_err(|e| {
                if e.starts_with("unknown key") {
                    format!("unknown key '{key}'")
                } else {
                    format!("train.{e}")
                }
            });
        }
        match self.flume.set(key, value) {
            Ok(true) => Ok(()),
            Ok(false) => Err(format!("unknown key '{key}'")),
            Err(e) => Err(e.to_string()),
        }
    }

    /// Fans the seed out and keeps the model's dropout in step with training.
    pub fn resolve(&mut self) {
        self.flume.wave.seed = self.seed;
        self.model.seed = self.seed;
        self.train.seed = self.seed;
        self.model.dropout = self.train.dropout;
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
            self.resolve();
        }
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        self.flume.validate().map_err(|e| e.to_string())?;
        self.model.validate().map_err(|e| e.to_string())?;
        self.train.validate().map_err(|e| e.to_string())
    }

    /// Every key with its resolved value; parsing this text gives back the same config.
    pub fn resolved_text(&self) -> String {
        let mut out = format!("seed={}\n", self.seed);
        for (k, v) in self.flume.entries() {
            out.push_str(&format!("{k}={v}\n"));
        }
        for (k, v) in self.model.to_entries() {
            if !TIED_MODEL_KEYS.contains(&k) {
                out.push_str(&format!("model.{k}={v}\n"));
            }
        }
        for (k, v) in self.train.to_entries() {
            out.push_str(&format!("train.{k}={v}\n"));
        }
        out
    }
}
