use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;

/// Sizes of every decoder component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Vocabulary size, including the reserved tokens.
    pub vocab: usize,
    pub embed: usize,
    /// Per-pixel feature dimension.
    pub feature_dim: usize,
    pub hidden: usize,
    /// Width of the attention hidden layer.
    pub attn: usize,
}

/// Range of the uniform weight initialisation.
pub const INIT_SCALE: f64 = 0.1;
/// Initial bias of the LSTM forget gate.
pub const FORGET_BIAS: f64 = 1.0;

/// Every learnable tensor of the decoder. Also used as the gradient type.
///
/// LSTM gates are packed along the last axis in the order input, forget,
/// cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    /// `vocab x embed`
    pub embedding: Tensor,
    /// `feature_dim x attn`
    pub att_feat: Tensor,
    /// `hidden x attn`
    pub att_hidden: Tensor,
    /// `attn`
    pub att_bias: Tensor,
    /// `attn`, projects the ReLU layer to one score per pixel
    pub att_out: Tensor,
    /// `(embed + feature_dim) x 4·hidden`
    pub lstm_input: Tensor,
    /// `hidden x 4·hidden`
    pub lstm_hidden: Tensor,
    /// `4·hidden`
    pub lstm_bias: Tensor,
    /// `feature_dim x hidden`
    pub init_h: Tensor,
    pub init_h_bias: Tensor,
    /// `feature_dim x hidden`
    pub init_c: Tensor,
    pub init_c_bias: Tensor,
    /// `hidden x vocab`
    pub out_proj: Tensor,
    pub out_bias: Tensor,
}

/// Fixed tensor names used by checkpoints, in canonical order.
pub const TENSOR_NAMES: [&str; 14] = [
    "embedding",
    "att_feat",
    "att_hidden",
    "att_bias",
    "att_out",
    "lstm_input",
    "lstm_hidden",
    "lstm_bias",
    "init_h",
    "init_h_bias",
    "init_c",
    "init_c_bias",
    "out_proj",
    "out_bias",
];

impl ModelDims {
    /// Expected shape of each tensor, aligned with [`TENSOR_NAMES`].
    pub fn shapes(&self) -> [Vec<usize>; 14] {
        let ModelDims {
            vocab: v,
            embed: e,
            feature_dim: d,
            hidden: h,
            attn: a,
        } = *self;
        [
            vec![v, e],
            vec![d, a],
            vec![h, a],
            vec![a],
            vec![a],
            vec![e + d, 4 * h],
            vec![h, 4 * h],
            vec![4 * h],
            vec![d, h],
            vec![h],
            vec![d, h],
            vec![h],
            vec![h, v],
            vec![v],
        ]
    }
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let [embedding, att_feat, att_hidden, att_bias, att_out, lstm_input, lstm_hidden, lstm_bias, init_h, init_h_bias, init_c, init_c_bias, out_proj, out_bias] =
            dims.shapes().map(|s| Tensor::zeros(&s));
        Self {
            dims,
            embedding,
            att_feat,
            att_hidden,
            att_bias,
            att_out,
            lstm_input,
            lstm_hidden,
            lstm_bias,
            init_h,
            init_h_bias,
            init_c,
            init_c_bias,
            out_proj,
            out_bias,
        }
    }

    /// Weights uniform in `[-0.1, 0.1]`, biases zero except the forget gate at 1.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(dims, &mut rng, INIT_SCALE)
    }

    /// Random weights and biases in `[-scale, scale]`. Used by tests that need
    /// every parameter to carry a nonzero gradient.
    pub fn random(dims: ModelDims, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(dims);
        for t in params.tensors_mut() {
            for v in &mut t.data {
                *v = rng.random_range(-scale..=scale);
            }
        }
        params
    }

    fn init_with(dims: ModelDims, rng: &mut ChaCha8Rng, scale: f64) -> Self {
        let mut params = Self::zeros(dims);
        for t in [
            &mut params.embedding,
            &mut params.att_feat,
            &mut params.att_hidden,
            &mut params.att_out,
            &mut params.lstm_input,
            &mut params.lstm_hidden,
            &mut params.init_h,
            &mut params.init_c,
            &mut params.out_proj,
        ] {
            for v in &mut t.data {
                *v = rng.random_range(-scale..=scale);
            }
        }
        let h = dims.hidden;
        params.lstm_bias.data[h..2 * h].fill(FORGET_BIAS);
        params
    }

    /// Tensors in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&Tensor; 14] {
        [
            &self.embedding,
            &self.att_feat,
            &self.att_hidden,
            &self.att_bias,
            &self.att_out,
            &self.lstm_input,
            &self.lstm_hidden,
            &self.lstm_bias,
            &self.init_h,
            &self.init_h_bias,
            &self.init_c,
            &self.init_c_bias,
            &self.out_proj,
            &self.out_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 14] {
        [
            &mut self.embedding,
            &mut self.att_feat,
            &mut self.att_hidden,
            &mut self.att_bias,
            &mut self.att_out,
            &mut self.lstm_input,
            &mut self.lstm_hidden,
            &mut self.lstm_bias,
            &mut self.init_h,
            &mut self.init_h_bias,
            &mut self.init_c,
            &mut self.init_c_bias,
            &mut self.out_proj,
            &mut self.out_bias,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        TENSOR_NAMES.into_iter().zip(self.tensors())
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in dst.data.iter_mut().zip(&src.data) {
                *a += scale * b;
            }
        }
    }

    /// Clamps every entry to `[-limit, limit]`.
    pub fn clamp(&mut self, limit: f64) {
        for t in self.tensors_mut() {
            for v in &mut t.data {
                *v = v.clamp(-limit, limit);
            }
        }
    }
}
