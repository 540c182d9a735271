//! Beam search over an arbitrary next-token scorer.
//!
//! The first step keeps the top `k` tokens after `<start>`. Every later step
//! expands each live hypothesis over the whole vocabulary and keeps the best
//! `k_live` extensions by cumulative log-probability, where `k_live` is `k`
//! minus the number of hypotheses already completed. A hypothesis that emits
//! `<end>` leaves the beam for the completed set. Search stops once `k`
//! hypotheses are complete or the live ones reach `max_len` tokens, in which
//! case they are completed as truncated. The caption returned is the
//! completed hypothesis with the highest cumulative score.
//!
//! Ties are always broken towards the lexicographically smaller token-id
//! sequence, so results are fully deterministic.

mod oracle;
pub mod toy;

use std::cmp::Ordering;

use thiserror::Error;

use crate::TokenId;

pub use oracle::{exhaustive_oracle, OracleOutcome, MAX_ORACLE_SEQUENCES};

/// Next-token distribution source driven by the search.
pub trait Scorer {
    type Input: ?Sized;
    /// Opaque decoding state.
    type State: Clone;

    fn vocab_size(&self) -> usize;

    fn start(&self, input: &Self::Input) -> Self::State;

    /// Consumes `prev` and returns the new state with log-probabilities for
    /// the next token.
    fn step(&self, state: &Self::State, prev: TokenId) -> (Self::State, Vec<f64>);
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    /// Beam width.
    pub k: usize,
    /// Maximum number of generated tokens, `<end>` included.
    pub max_len: usize,
    pub start_id: TokenId,
    /// `None` disables termination, giving fixed-length decoding.
    pub end_id: Option<TokenId>,
    /// Rank by score per token instead of raw cumulative score. Off by default.
    pub length_normalize: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            k: 4,
            max_len: 50,
            start_id: crate::corpus::START_ID,
            end_id: Some(crate::corpus::END_ID),
            length_normalize: false,
        }
    }
}

impl BeamConfig {
    pub fn with_width(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    fn validate(&self, vocab: usize) -> Result<(), BeamError> {
        if vocab == 0 {
            return Err(BeamError::EmptyVocab);
        }
        if self.k == 0 {
            return Err(BeamError::InvalidConfig("beam width must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(BeamError::InvalidConfig("max_len must be at least 1".into()));
        }
        if let Some(end) = self.end_id {
            if end as usize >= vocab {
                return Err(BeamError::InvalidConfig(format!(
                    "end id {end} is outside the vocabulary of {vocab}"
                )));
            }
        }
        Ok(())
    }

    fn rank(&self, score: f64, len: usize) -> f64 {
        if self.length_normalize && len > 0 {
            score / len as f64
        } else {
            score
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("scorer has an empty vocabulary")]
    EmptyVocab,
    #[error("invalid beam configuration: {0}")]
    InvalidConfig(String),
    #[error("search space of {size} sequences exceeds the oracle limit of {limit}")]
    SearchSpaceTooLarge { size: String, limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BeamWarning {
    /// Requested width exceeds the vocabulary, so the first step can only
    /// seed `used` hypotheses. Later steps still keep up to `requested`.
    DegenerateWidth { requested: usize, used: usize },
}

/// A scored token sequence.
#[derive(Debug, Clone)]
pub struct Hypothesis<S> {
    /// Generated tokens, `<start>` excluded, `<end>` included when emitted.
    pub tokens: Vec<TokenId>,
    /// Sum of the log-probabilities of `tokens`.
    pub score: f64,
    /// Scorer state that still has to consume the last token.
    pub state: S,
    /// `true` when the sequence ended with `<end>`; `false` when it was cut
    /// at `max_len`.
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub struct BeamResult<S> {
    pub best: Hypothesis<S>,
    /// Every finished hypothesis, best first.
    pub completed: Vec<Hypothesis<S>>,
    pub warnings: Vec<BeamWarning>,
}

/// Orders by rank descending, then token sequence ascending.
fn better(rank_a: f64, tokens_a: &[TokenId], rank_b: f64, tokens_b: &[TokenId]) -> Ordering {
    rank_b
        .total_cmp(&rank_a)
        .then_with(|| tokens_a.cmp(tokens_b))
}

struct Candidate {
    parent: usize,
    token: TokenId,
    score: f64,
}

pub fn beam_search<Sc: Scorer>(
    scorer: &Sc,
    input: &Sc::Input,
    cfg: &BeamConfig,
) -> Result<BeamResult<Sc::State>, BeamError> {
    let vocab = scorer.vocab_size();
    cfg.validate(vocab)?;
    let k = cfg.k;
    let mut warnings = Vec::new();
    if k > vocab {
        warnings.push(BeamWarning::DegenerateWidth {
            requested: k,
            used: vocab,
        });
    }

    // The root is a zero-length hypothesis that consumes `<start>`.
    let mut live: Vec<(Hypothesis<Sc::State>, TokenId)> = vec![(
        Hypothesis {
            tokens: Vec::new(),
            score: 0.0,
            state: scorer.start(input),
            complete: false,
        },
        cfg.start_id,
    )];
    let mut completed: Vec<Hypothesis<Sc::State>> = Vec::new();

    while !live.is_empty() && completed.len() < k {
        let width = k - completed.len();
        let mut next_states = Vec::with_capacity(live.len());
        let mut candidates = Vec::with_capacity(live.len() * vocab);
        for (parent, (hyp, last)) in live.iter().enumerate() {
            let (state, log_probs) = scorer.step(&hyp.state, *last);
            debug_assert_eq!(log_probs.len(), vocab);
            candidates.extend(log_probs.iter().enumerate().map(|(tok, lp)| Candidate {
                parent,
                token: tok as TokenId,
                score: hyp.score + lp,
            }));
            next_states.push(state);
        }
        // Live hypotheses share one length, so ordering by (parent tokens,
        // token) is the lexicographic order of the extended sequences.
        let len = live[0].0.tokens.len() + 1;
        candidates.sort_by(|a, b| {
            cfg.rank(b.score, len)
                .total_cmp(&cfg.rank(a.score, len))
                .then_with(|| live[a.parent].0.tokens.cmp(&live[b.parent].0.tokens))
                .then_with(|| a.token.cmp(&b.token))
        });
        candidates.truncate(width);

        let mut next_live = Vec::with_capacity(width);
        for cand in candidates {
            let mut tokens = live[cand.parent].0.tokens.clone();
            tokens.push(cand.token);
            let ended = cfg.end_id == Some(cand.token);
            let hyp = Hypothesis {
                tokens,
                score: cand.score,
                state: next_states[cand.parent].clone(),
                complete: ended,
            };
            if ended || len >= cfg.max_len {
                completed.push(hyp);
            } else {
                next_live.push((hyp, cand.token));
            }
        }
        live = next_live;
    }
    completed.sort_by(|a, b| {
        better(
            cfg.rank(a.score, a.tokens.len()),
            &a.tokens,
            cfg.rank(b.score, b.tokens.len()),
            &b.tokens,
        )
    });
    let best = completed[0].clone();
    Ok(BeamResult {
        best,
        completed,
        warnings,
    })
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if v.total_cmp(&values[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Takes the most probable token at every step until `<end>` or `max_len`.
pub fn greedy_decode<Sc: Scorer>(
    scorer: &Sc,
    input: &Sc::Input,
    cfg: &BeamConfig,
) -> Result<Hypothesis<Sc::State>, BeamError> {
    cfg.validate(scorer.vocab_size())?;
    let mut state = scorer.start(input);
    let mut last = cfg.start_id;
    let mut tokens = Vec::new();
    let mut score = 0.0;
    loop {
        let (next, log_probs) = scorer.step(&state, last);
        let tok = argmax(&log_probs);
        score += log_probs[tok];
        tokens.push(tok as TokenId);
        let ended = cfg.end_id == Some(tok as TokenId);
        if ended || tokens.len() >= cfg.max_len {
            return Ok(Hypothesis {
                tokens,
                score,
                state: next,
                complete: ended,
            });
        }
        state = next;
        last = tok as TokenId;
    }
}

/// Recomputes the cumulative log-probability of `tokens` from scratch.
pub fn replay_score<Sc: Scorer>(scorer: &Sc, input: &Sc::Input, start_id: TokenId, tokens: &[TokenId]) -> f64 {
    let mut state = scorer.start(input);
    let mut last = start_id;
    let mut score = 0.0;
    for &tok in tokens {
        let (next, log_probs) = scorer.step(&state, last);
        score += log_probs[tok as usize];
        state = next;
        last = tok;
    }
    score
}
