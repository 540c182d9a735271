use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use super::{ngram_counts, ScoringInstance};

/// Highest n-gram order used by CIDEr.
pub const CIDER_MAX_N: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("CIDEr needs corpus statistics built from at least one instance")]
    MissingCorpusStats,
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
}

/// Document frequencies of reference n-grams over an evaluation set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    /// Number of instances.
    pub num_instances: usize,
    /// Per order (index `n - 1`): n-gram -> number of instances whose
    /// reference set contains it.
    pub doc_freq: Vec<HashMap<Vec<String>, usize>>,
}

impl CorpusStats {
    pub fn build(instances: &[ScoringInstance]) -> Self {
        let mut doc_freq: Vec<HashMap<Vec<String>, usize>> = vec![HashMap::new(); CIDER_MAX_N];
        for inst in instances {
            for (n, df) in (1..=CIDER_MAX_N).zip(doc_freq.iter_mut()) {
                let seen: HashSet<&[String]> = inst
                    .references
                    .iter()
                    .flat_map(|r| ngram_counts(r, n).counts.into_keys())
                    .collect();
                for gram in seen {
                    *df.entry(gram.to_vec()).or_insert(0) += 1;
                }
            }
        }
        Self {
            num_instances: instances.len(),
            doc_freq,
        }
    }

    /// `ln((1 + N) / (1 + df))`
    pub fn idf(&self, gram: &[String]) -> f64 {
        let df = self
            .doc_freq
            .get(gram.len().wrapping_sub(1))
            .and_then(|m| m.get(gram))
            .copied()
            .unwrap_or(0);
        ((1.0 + self.num_instances as f64) / (1.0 + df as f64)).ln()
    }
}

/// TF-IDF weights of the n-grams of one sentence. Ordered so sums are
/// reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfVector {
    pub n: usize,
    pub weights: BTreeMap<Vec<String>, f64>,
}

impl TfIdfVector {
    pub fn new(sentence: &[String], n: usize, stats: &CorpusStats) -> Self {
        let weights = ngram_counts(sentence, n)
            .counts
            .into_iter()
            .map(|(gram, tf)| (gram.to_vec(), tf as f64 * stats.idf(gram)))
            .collect();
        Self { n, weights }
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &TfIdfVector) -> f64 {
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .weights
            .iter()
            .filter_map(|(g, w)| large.weights.get(g).map(|v| w * v))
            .sum()
    }

    /// Cosine similarity, 0 when either vector has zero norm.
    pub fn cosine(&self, other: &TfIdfVector) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            (self.dot(other) / denom).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiderScores {
    /// CIDEr-1 through CIDEr-4.
    pub per_n: [f64; CIDER_MAX_N],
    /// Unweighted mean of `per_n`.
    pub mean: f64,
}

/// Mean TF-IDF cosine between the candidate and each reference, per order.
pub fn cider(inst: &ScoringInstance, stats: &CorpusStats) -> Result<CiderScores, MetricsError> {
    if stats.num_instances == 0 || stats.doc_freq.len() < CIDER_MAX_N {
        return Err(MetricsError::MissingCorpusStats);
    }
    let mut per_n = [0.0; CIDER_MAX_N];
    if !inst.references.is_empty() {
        for (n, slot) in (1..=CIDER_MAX_N).zip(per_n.iter_mut()) {
            let cand = TfIdfVector::new(&inst.candidate, n, stats);
            let total: f64 = inst
                .references
                .iter()
                .map(|r| cand.cosine(&TfIdfVector::new(r, n, stats)))
                .sum();
            *slot = total / inst.references.len() as f64;
        }
    }
    let mean = per_n.iter().sum::<f64>() / CIDER_MAX_N as f64;
    Ok(CiderScores { per_n, mean })
}
