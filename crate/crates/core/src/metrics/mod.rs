//! Caption evaluation metrics.
//!
//! All scores are in `[0, 1]`. Sentences shorter than the n-gram order score
//! zero instead of failing.
//!
//! - BLEU-n is clipped n-gram precision without a brevity penalty; the
//!   composite BLEU is the unsmoothed geometric mean of BLEU-1..4.
//! - ROUGE-n pools n-gram recall over all references; ROUGE-L is the
//!   LCS F-measure with β = 1.2, maximised over references.
//! - CIDEr-n is the mean cosine between TF-IDF vectors of the candidate and
//!   each reference with IDF = ln((1 + N) / (1 + df)); no ×10 scale and no
//!   length penalty.
//! - METEOR uses exact unigram matches, Fmean = 10PR / (R + 9P) and the
//!   fragmentation penalty 0.5 (chunks / matches)³, maximised over references.

mod bleu;
mod cider;
mod corpus;
mod meteor;
mod ngram;
mod rouge;

pub use bleu::{bleu_composite, bleu_n, bleu_stats, geometric_mean};
pub use cider::{cider, CiderScores, CorpusStats, MetricsError, TfIdfVector, CIDER_MAX_N};
pub use corpus::{corpus_score, MetricReport};
pub use meteor::{meteor, meteor_alignment, MeteorAlignment};
pub use ngram::{ngram_counts, NGramCounts};
pub use rouge::{lcs_len, rouge_l, rouge_n, ROUGE_L_BETA};

/// One candidate with its references.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringInstance {
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl ScoringInstance {
    pub fn new<S: AsRef<str>>(candidate: &[S], references: &[Vec<S>]) -> Self {
        let own = |s: &[S]| s.iter().map(|t| t.as_ref().to_string()).collect();
        Self {
            candidate: own(candidate),
            references: references.iter().map(|r| own(r)).collect(),
        }
    }

    /// Tokenizes raw text with [`crate::corpus::tokenize`].
    pub fn from_text<S: AsRef<str>>(candidate: &str, references: &[S]) -> Self {
        Self {
            candidate: crate::corpus::tokenize(candidate),
            references: references
                .iter()
                .map(|r| crate::corpus::tokenize(r.as_ref()))
                .collect(),
        }
    }
}

#[cfg(test)]
pub(crate) fn inst(candidate: &str, refs: &[&str]) -> ScoringInstance {
    ScoringInstance {
        candidate: candidate.split_whitespace().map(String::from).collect(),
        references: refs
            .iter()
            .map(|r| r.split_whitespace().map(String::from).collect())
            .collect(),
    }
}
