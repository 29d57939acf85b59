//! Plain-text checkpoint container.
//!
//! ```text
//! fanet-checkpoint 1
//! config.<key>=<value>          one line per ModelConfig field
//! meta.<key>=<value>            free-form run metadata (optional)
//! tensor <name> <dim>...        shape header, then one line per row of
//! <hex> <hex> ...               64-bit IEEE-754 bit patterns (16 hex digits)
//! end
//! ```
//!
//! Values are stored as raw bit patterns, so save → load is bit-exact.
//! Model tensors come first in traversal order; any extra tensors
//! (e.g. normalization statistics) follow under their own names.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{ModelConfig, ModelParams};
use crate::tensor::Tensor;

const MAGIC: &str = "fanet-checkpoint 1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("checkpoint incompatible: {0}")]
    Incompatible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub extras: BTreeMap<String, Tensor>,
    pub meta: BTreeMap<String, String>,
}

fn write_tensor(out: &mut String, name: &str, t: &Tensor) {
    let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "tensor {name} {}", dims.join(" "));
    let cols = *t.shape().last().expect("tensor has a shape");
    for row in t.data().chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{:016x}", v.to_bits())).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

impl Checkpoint {
    pub fn new(config: ModelConfig, params: ModelParams) -> Self {
        Checkpoint {
            config,
            params,
            extras: BTreeMap::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        for (k, v) in self.config.to_entries() {
            let _ = writeln!(out, "config.{k}={v}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta.{k}={v}");
        }
        for (name, t) in self.params.entries() {
            write_tensor(&mut out, &name, t);
        }
        for (name, t) in &self.extras {
            write_tensor(&mut out, &format!("extra.{name}"), t);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CheckpointError> {
        let mut lines = text.lines().enumerate().peekable();
        let perr = |line: usize, msg: String| CheckpointError::Parse { line: line + 1, msg };
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(perr(0, "missing checkpoint header".into())),
        }
        let mut config = ModelConfig::default();
        let mut meta = BTreeMap::new();
        let mut tensors: BTreeMap<String, Tensor> = BTreeMap::new();
        let mut ended = false;
        while let Some((i, line)) = lines.next() {
            if line == "end" {
                ended = true;
                break;
            }
            if let Some(kv) = line.strip_prefix("config.") {
                let (k, v) = kv.split_once('=').ok_or_else(|| perr(i, "expected key=value".into()))?;
                config.set_entry(k, v).map_err(|m| perr(i, m))?;
            } else if let Some(kv) = line.strip_prefix("meta.") {
                let (k, v) = kv.split_once('=').ok_or_else(|| perr(i, "expected key=value".into()))?;
                meta.insert(k.to_string(), v.to_string());
            } else if let Some(head) = line.strip_prefix("tensor ") {
                let mut parts = head.split_whitespace();
                let name = parts.next().ok_or_else(|| perr(i, "tensor without name".into()))?.to_string();
                let shape = parts
                    .map(|d| d.parse::<usize>().map_err(|_| perr(i, format!("bad extent '{d}'"))))
                    .collect::<Result<Vec<_>, _>>()?;
                let n: usize = shape.iter().product();
                let mut data = Vec::with_capacity(n);
                while data.len() < n {
                    let (j, row) = lines.next().ok_or_else(|| perr(i, format!("tensor {name} truncated")))?;
                    for word in row.split_whitespace() {
                        let bits = u64::from_str_radix(word, 16).map_err(|_| perr(j, format!("bad value '{word}'")))?;
                        data.push(f64::from_bits(bits));
                    }
                }
                let t = Tensor::new(shape, data).map_err(|e| perr(i, e.to_string()))?;
                if tensors.insert(name.clone(), t).is_some() {
                    return Err(perr(i, format!("duplicate tensor {name}")));
                }
            } else if !line.trim().is_empty() {
                return Err(perr(i, format!("unrecognized line '{line}'")));
            }
        }
        if !ended {
            return Err(perr(text.lines().count(), "missing end marker".into()));
        }
        config
            .validate()
            .map_err(|e| CheckpointError::Incompatible(e.to_string()))?;

        let template = super::param_shapes(&config);
        let mut missing = Vec::new();
        let params = template.map_named(|name, shape| match tensors.remove(name) {
            Some(t) if t.shape() == shape.as_slice() => t,
            Some(t) => {
                missing.push(format!("{name} has shape {:?}, expected {shape:?}", t.shape()));
                Tensor::zeros(shape)
            }
            None => {
                missing.push(format!("{name} missing"));
                Tensor::zeros(shape)
            }
        });
        if !missing.is_empty() {
            return Err(CheckpointError::Incompatible(missing.join("; ")));
        }
        let mut extras = BTreeMap::new();
        for (name, t) in tensors {
            match name.strip_prefix("extra.") {
                Some(n) => {
                    extras.insert(n.to_string(), t);
                }
                None => return Err(CheckpointError::Incompatible(format!("unexpected tensor {name}"))),
            }
        }
        Ok(Checkpoint {
            config,
            params,
            extras,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Checkpoint::from_text(&std::fs::read_to_string(path)?)
    }
}
