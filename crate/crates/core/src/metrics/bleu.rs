use super::{ngram_counts, ScoringInstance};

/// Clipped n-gram matches and candidate n-gram total for one instance.
pub fn bleu_stats(inst: &ScoringInstance, n: usize) -> (usize, usize) {
    let cand = ngram_counts(&inst.candidate, n);
    let refs: Vec<_> = inst.references.iter().map(|r| ngram_counts(r, n)).collect();
    let clipped = cand
        .counts
        .iter()
        .map(|(gram, &c)| {
            let max_ref = refs.iter().map(|r| r.get(gram)).max().unwrap_or(0);
            c.min(max_ref)
        })
        .sum();
    (clipped, cand.total())
}

/// Clipped n-gram precision; 0 when the candidate has no n-grams.
pub fn bleu_n(inst: &ScoringInstance, n: usize) -> f64 {
    match bleu_stats(inst, n) {
        (_, 0) => 0.0,
        (m, t) => m as f64 / t as f64,
    }
}

/// Geometric mean, 0 as soon as one component is 0.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Geometric mean of BLEU-1 through BLEU-4.
pub fn bleu_composite(inst: &ScoringInstance) -> f64 {
    let parts: Vec<f64> = (1..=4).map(|n| bleu_n(inst, n)).collect();
    geometric_mean(&parts)
}
