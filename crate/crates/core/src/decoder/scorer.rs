use std::sync::Arc;

use super::model::step_raw;
use super::{init_state, DecoderError, DecoderState, ModelParams};
use crate::beam::Scorer;
use crate::corpus::FeatureGrid;
use crate::TokenId;

/// Beam-search adapter over a trained decoder.
#[derive(Debug, Clone, Copy)]
pub struct DecoderScorer<'p> {
    params: &'p ModelParams,
}

/// Decoder state plus the shared, widened feature grid.
#[derive(Debug, Clone)]
pub struct ScorerState {
    pub decoder: DecoderState,
    /// Attention row from the step that produced this state.
    pub last_alpha: Option<Vec<f64>>,
    features: Arc<Vec<f64>>,
    pixels: usize,
}

impl<'p> DecoderScorer<'p> {
    pub fn new(params: &'p ModelParams) -> Self {
        Self { params }
    }

    /// Checks the grid against the model before decoding.
    pub fn validate(&self, features: &FeatureGrid) -> Result<(), DecoderError> {
        init_state(features, self.params).map(|_| ())
    }
}

impl Scorer for DecoderScorer<'_> {
    type Input = FeatureGrid;
    type State = ScorerState;

    fn vocab_size(&self) -> usize {
        self.params.dims.vocab
    }

    /// # Panics
    ///
    /// If the grid's feature dimension differs from the model's; call
    /// [`DecoderScorer::validate`] first.
    fn start(&self, input: &FeatureGrid) -> ScorerState {
        let decoder = init_state(input, self.params).expect("feature grid matches model");
        ScorerState {
            decoder,
            last_alpha: None,
            features: Arc::new(input.to_f64()),
            pixels: input.pixels(),
        }
    }

    fn step(&self, state: &ScorerState, prev: TokenId) -> (ScorerState, Vec<f64>) {
        let (decoder, log_probs, alpha) =
            step_raw(&state.features, state.pixels, &state.decoder, prev, self.params);
        (
            ScorerState {
                decoder,
                last_alpha: Some(alpha),
                features: Arc::clone(&state.features),
                pixels: state.pixels,
            },
            log_probs,
        )
    }
}
