use super::{BeamConfig, BeamError, Hypothesis, Scorer};
use crate::TokenId;

/// Largest `V^max_len` the oracle will enumerate.
pub const MAX_ORACLE_SEQUENCES: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct OracleOutcome<S> {
    pub best: Hypothesis<S>,
    /// Number of finished sequences scored.
    pub evaluated: usize,
}

/// Scores every finished sequence (ended by `<end>` or cut at `max_len`)
/// and returns the best one under the same ranking and tie rule as
/// [`super::beam_search`]. Refuses when `V^max_len` exceeds
/// [`MAX_ORACLE_SEQUENCES`].
pub fn exhaustive_oracle<Sc: Scorer>(
    scorer: &Sc,
    input: &Sc::Input,
    cfg: &BeamConfig,
) -> Result<OracleOutcome<Sc::State>, BeamError> {
    let vocab = scorer.vocab_size();
    cfg.validate(vocab)?;
    let space = u32::try_from(cfg.max_len)
        .ok()
        .and_then(|len| (vocab as u64).checked_pow(len));
    match space {
        Some(n) if n <= MAX_ORACLE_SEQUENCES => {}
        _ => {
            return Err(BeamError::SearchSpaceTooLarge {
                size: format!("{vocab}^{}", cfg.max_len),
                limit: MAX_ORACLE_SEQUENCES,
            })
        }
    }

    let mut search = Search {
        scorer,
        cfg,
        best: None,
        evaluated: 0,
    };
    let mut prefix = Vec::with_capacity(cfg.max_len);
    search.expand(&scorer.start(input), cfg.start_id, &mut prefix, 0.0);
    Ok(OracleOutcome {
        best: search.best.expect("at least one sequence is enumerated"),
        evaluated: search.evaluated,
    })
}

struct Search<'a, Sc: Scorer> {
    scorer: &'a Sc,
    cfg: &'a BeamConfig,
    best: Option<Hypothesis<Sc::State>>,
    evaluated: usize,
}

impl<Sc: Scorer> Search<'_, Sc> {
    fn expand(&mut self, state: &Sc::State, last: TokenId, prefix: &mut Vec<TokenId>, score: f64) {
        let (next, log_probs) = self.scorer.step(state, last);
        for (tok, lp) in log_probs.iter().enumerate() {
            let tok = tok as TokenId;
            let total = score + lp;
            prefix.push(tok);
            let ended = self.cfg.end_id == Some(tok);
            if ended || prefix.len() >= self.cfg.max_len {
                self.offer(prefix, total, &next, ended);
            } else {
                self.expand(&next, tok, prefix, total);
            }
            prefix.pop();
        }
    }

    fn offer(&mut self, tokens: &[TokenId], score: f64, state: &Sc::State, complete: bool) {
        self.evaluated += 1;
        let rank = self.cfg.rank(score, tokens.len());
        let wins = match &self.best {
            None => true,
            Some(b) => {
                super::better(rank, tokens, self.cfg.rank(b.score, b.tokens.len()), &b.tokens)
                    .is_lt()
            }
        };
        if wins {
            self.best = Some(Hypothesis {
                tokens: tokens.to_vec(),
                score,
                state: state.clone(),
                complete,
            });
        }
    }
}
