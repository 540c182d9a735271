//! JSON checkpoints.
//!
//! ```text
//! {
//!   "version": 1,
//!   "config": {"model": {vocab, embed, feature_dim, hidden, attn}, "train": {...}},
//!   "wordmap": {"<pad>": 0, ...},
//!   "params": {"<tensor name>": {"shape": [..], "data": [..]}, ...}
//! }
//! ```
//!
//! Tensor names are listed in [`TENSOR_NAMES`]. Floats are written in
//! shortest round-trip decimal form, so loading restores every bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelDims, ModelParams, Tensor, TrainConfig, TENSOR_NAMES};
use crate::corpus::WordMap;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointConfig {
    pub model: ModelDims,
    pub train: TrainConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    version: u32,
    config: CheckpointConfig,
    wordmap: WordMap,
    params: BTreeMap<String, Tensor>,
}

/// A loaded checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub train: TrainConfig,
    pub wordmap: WordMap,
}

pub fn checkpoint_save(params: &ModelParams, cfg: &TrainConfig, wordmap: &WordMap) -> Vec<u8> {
    let env = Envelope {
        version: CHECKPOINT_VERSION,
        config: CheckpointConfig {
            model: params.dims,
            train: cfg.clone(),
        },
        wordmap: wordmap.clone(),
        params: params
            .named()
            .map(|(name, t)| (name.to_string(), t.clone()))
            .collect(),
    };
    let mut bytes = serde_json::to_vec(&env).expect("checkpoint serializes");
    bytes.push(b'\n');
    bytes
}

pub fn checkpoint_load(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let corrupt = |msg: String| CheckpointError::CorruptCheckpoint(msg);
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    let found = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing version tag".into()))?;
    if found != u64::from(CHECKPOINT_VERSION) {
        return Err(CheckpointError::VersionMismatch {
            found,
            expected: CHECKPOINT_VERSION,
        });
    }
    let mut env: Envelope = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;

    let dims = env.config.model;
    if env.wordmap.len() != dims.vocab {
        return Err(corrupt(format!(
            "wordmap has {} entries but model vocab is {}",
            env.wordmap.len(),
            dims.vocab
        )));
    }
    let mut params = ModelParams::zeros(dims);
    for ((name, shape), slot) in TENSOR_NAMES
        .iter()
        .zip(dims.shapes())
        .zip(params.tensors_mut())
    {
        let t = env
            .params
            .remove(*name)
            .ok_or_else(|| corrupt(format!("missing tensor {name}")))?;
        if t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
            return Err(corrupt(format!(
                "tensor {name} has shape {:?} with {} values, expected {shape:?}",
                t.shape,
                t.data.len()
            )));
        }
        if !t.is_finite() {
            return Err(corrupt(format!("tensor {name} holds non-finite values")));
        }
        *slot = t;
    }
    if let Some(extra) = env.params.keys().next() {
        return Err(corrupt(format!("unknown tensor {extra}")));
    }
    Ok(Checkpoint {
        params,
        train: env.config.train,
        wordmap: env.wordmap,
    })
}
