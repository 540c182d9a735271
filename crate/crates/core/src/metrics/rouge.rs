use super::{ngram_counts, ScoringInstance};

pub const ROUGE_L_BETA: f64 = 1.2;

/// n-gram recall pooled over all references: matched reference n-grams over
/// the total reference n-gram count.
pub fn rouge_n(inst: &ScoringInstance, n: usize) -> f64 {
    let cand = ngram_counts(&inst.candidate, n);
    let (mut hits, mut total) = (0usize, 0usize);
    for r in &inst.references {
        let counts = ngram_counts(r, n);
        for (gram, &c) in &counts.counts {
            hits += c.min(cand.get(gram));
            total += c;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure, best reference wins.
pub fn rouge_l(inst: &ScoringInstance) -> f64 {
    let a = &inst.candidate;
    if a.is_empty() {
        return 0.0;
    }
    let b2 = ROUGE_L_BETA * ROUGE_L_BETA;
    inst.references
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            let lcs = lcs_len(a, r) as f64;
            let p = lcs / a.len() as f64;
            let rec = lcs / r.len() as f64;
            if p == 0.0 && rec == 0.0 {
                0.0
            } else {
                (1.0 + b2) * p * rec / (rec + b2 * p)
            }
        })
        .fold(0.0, f64::max)
}
