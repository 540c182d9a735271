use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{gradients, DecoderError, ModelParams, TrainConfig, TrainingExample};

/// Loss summary of one epoch, measured before each example's update.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub mean_cross_entropy: f64,
    /// Mean doubly stochastic penalty (unweighted).
    pub ds_penalty: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub trace: Vec<EpochStats>,
}

/// Per-example gradient descent with optional absolute clipping.
///
/// Examples are visited in an order reshuffled every epoch from a generator
/// seeded with `cfg.seed`, so two runs with equal inputs are bit-identical.
pub fn train(
    examples: &[TrainingExample],
    mut params: ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, DecoderError> {
    if examples.is_empty() {
        return Err(DecoderError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let n = examples.len() as f64;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        // Indexed by example so the epoch means do not depend on visit order.
        let mut stats = vec![(0.0, 0.0, 0.0); examples.len()];
        for &idx in &order {
            let (mut grads, out) = gradients(&examples[idx], &params, cfg)?;
            if !out.loss.is_finite() {
                return Err(DecoderError::NonFiniteLoss { epoch });
            }
            stats[idx] = (out.loss, out.cross_entropy, out.penalty);
            if let Some(limit) = cfg.grad_clip {
                grads.clamp(limit);
            }
            params.add_scaled(&grads, -cfg.learning_rate);
        }
        if !params.is_finite() {
            return Err(DecoderError::NonFiniteLoss { epoch });
        }
        let sum = stats
            .iter()
            .fold((0.0, 0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1, acc.2 + s.2));
        trace.push(EpochStats {
            epoch,
            mean_loss: sum.0 / n,
            mean_cross_entropy: sum.1 / n,
            ds_penalty: sum.2 / n,
        });
    }
    Ok(TrainOutcome { params, trace })
}
