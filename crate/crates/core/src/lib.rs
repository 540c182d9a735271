//! Attention-based image caption decoding toolkit.
//!
//! The crate is split into four layers:
//!
//! - [`corpus`]: tokenization, word maps, `.abft` feature grids, JSONL
//!   datasets and a deterministic synthetic data generator.
//! - [`decoder`]: a soft-attention LSTM decoder with teacher-forced
//!   training, doubly stochastic attention regularization, hand-derived
//!   gradients and JSON checkpoints.
//! - [`beam`]: a generic beam search over any [`beam::Scorer`], plus greedy
//!   decoding and an exhaustive reference search.
//! - [`metrics`]: BLEU, ROUGE-N, ROUGE-L, CIDEr and METEOR with corpus-level
//!   aggregation.

pub mod beam;
pub mod corpus;
pub mod decoder;
pub mod metrics;

/// Integer id of a token in a [`corpus::WordMap`].
pub type TokenId = u32;
