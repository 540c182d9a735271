//! Small synthetic scorers for exercising the search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Scorer;
use crate::decoder::log_softmax;
use crate::TokenId;

/// Prefix of tokens consumed after `<start>`; `None` before `<start>`.
pub type PrefixState = Option<Vec<TokenId>>;

fn advance(state: &PrefixState, prev: TokenId) -> Vec<TokenId> {
    match state {
        None => Vec::new(),
        Some(prefix) => {
            let mut p = prefix.clone();
            p.push(prev);
            p
        }
    }
}

/// Scorer whose distribution is an arbitrary function of the prefix.
/// The function returns probabilities; they are converted to logs.
pub struct FnScorer<F> {
    vocab: usize,
    probs: F,
}

impl<F: Fn(&[TokenId]) -> Vec<f64>> FnScorer<F> {
    pub fn new(vocab: usize, probs: F) -> Self {
        Self { vocab, probs }
    }
}

impl<F: Fn(&[TokenId]) -> Vec<f64>> Scorer for FnScorer<F> {
    type Input = ();
    type State = PrefixState;

    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn start(&self, _: &()) -> PrefixState {
        None
    }

    fn step(&self, state: &PrefixState, prev: TokenId) -> (PrefixState, Vec<f64>) {
        let prefix = advance(state, prev);
        let lp = (self.probs)(&prefix).into_iter().map(f64::ln).collect();
        (Some(prefix), lp)
    }
}

/// Scorer with pseudo-random logits derived from `(seed, prefix)`.
#[derive(Debug, Clone, Copy)]
pub struct RandomScorer {
    pub vocab: usize,
    pub seed: u64,
    /// Standard deviation of the logits; larger values sharpen the distributions.
    pub temperature: f64,
}

impl RandomScorer {
    pub fn new(vocab: usize, seed: u64) -> Self {
        Self {
            vocab,
            seed,
            temperature: 1.5,
        }
    }

    /// Log-probabilities after `prefix`.
    pub fn log_probs(&self, prefix: &[TokenId]) -> Vec<f64> {
        // FNV-1a over the seed and prefix.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for word in std::iter::once(self.seed)
            .chain(std::iter::once(prefix.len() as u64))
            .chain(prefix.iter().map(|&t| u64::from(t)))
        {
            for b in word.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let logits: Vec<f64> = (0..self.vocab)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.temperature * z
            })
            .collect();
        log_softmax(&logits)
    }
}

impl Scorer for RandomScorer {
    type Input = ();
    type State = PrefixState;

    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn start(&self, _: &()) -> PrefixState {
        None
    }

    fn step(&self, state: &PrefixState, prev: TokenId) -> (PrefixState, Vec<f64>) {
        let prefix = advance(state, prev);
        let lp = self.log_probs(&prefix);
        (Some(prefix), lp)
    }
}
