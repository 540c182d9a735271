//! Soft-attention LSTM caption decoder.
//!
//! At every step the decoder scores each pixel of the feature grid against
//! the previous hidden state, forms a softmax-weighted context vector, feeds
//! `[word embedding, context]` through an LSTM cell and projects the new
//! hidden state to log-probabilities over the vocabulary.
//!
//! Training is teacher-forced and adds the doubly stochastic penalty
//! `λ Σ_p (1 − Σ_t α[t][p])²`, which pushes every pixel to receive a total
//! attention of one over the caption. Gradients are derived by hand and run
//! in `f64`.

mod checkpoint;
mod model;
mod params;
mod scorer;
mod tensor;
mod train;

use thiserror::Error;

pub use checkpoint::{checkpoint_load, checkpoint_save, Checkpoint, CheckpointConfig, CheckpointError, CHECKPOINT_VERSION};
pub use model::{
    attend, batch_gradients, cross_entropy_totals, decode_step, forward_teacher_forced, gradients,
    init_state, replay_attention, Attention, AttentionWeights, DecoderState, ForwardOutput,
    TrainConfig, TrainingExample,
};
pub use params::{ModelDims, ModelParams, FORGET_BIAS, INIT_SCALE, TENSOR_NAMES};
pub use scorer::{DecoderScorer, ScorerState};
pub use tensor::{log_softmax, softmax, Tensor};
pub use train::{train, EpochStats, TrainOutcome};

use crate::TokenId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoderError {
    #[error("{what} has size {actual}, expected {expected}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("token id {token} is outside the vocabulary of {vocab}")]
    TokenOutOfRange { token: TokenId, vocab: usize },
    #[error("reference caption is empty")]
    EmptyReference,
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}
