use std::collections::HashMap;

use super::ScoringInstance;

/// Exact-match unigram alignment between a candidate and one reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorAlignment {
    /// Matched unigrams.
    pub matches: usize,
    /// Maximal runs of consecutive candidate tokens aligned to consecutive
    /// reference tokens.
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
}

impl MeteorAlignment {
    /// `10PR / (R + 9P) · (1 − 0.5 (chunks / matches)³)`, 0 without matches.
    pub fn score(&self) -> f64 {
        if self.matches == 0 {
            return 0.0;
        }
        let (p, r) = (self.precision, self.recall);
        let fmean = 10.0 * p * r / (r + 9.0 * p);
        let frag = self.chunks as f64 / self.matches as f64;
        fmean * (1.0 - 0.5 * frag.powi(3))
    }
}

/// Best alignment of `cand` to `reference`: as many matches as possible,
/// then as few chunks as possible.
pub fn meteor_alignment(cand: &[String], reference: &[String]) -> MeteorAlignment {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut interned = Vec::with_capacity(cand.len() + reference.len());
    for tok in cand.iter().chain(reference) {
        let next = ids.len();
        interned.push(*ids.entry(tok.as_str()).or_insert(next));
    }
    let (a, b) = interned.split_at(cand.len());
    let vocab = ids.len();

    let mut ref_counts = vec![0usize; vocab];
    b.iter().for_each(|&w| ref_counts[w] += 1);
    let mut cand_counts = vec![0usize; vocab];
    a.iter().for_each(|&w| cand_counts[w] += 1);
    let matches: usize = (0..vocab).map(|w| cand_counts[w].min(ref_counts[w])).sum();

    let chunks = if matches == 0 {
        0
    } else {
        let mut aligner = Aligner {
            a,
            b,
            vocab,
            target: matches,
            memo: HashMap::new(),
        };
        let mut used = vec![0u64; b.len().div_ceil(64)];
        aligner
            .min_chunks(0, None, &mut used, 0)
            .expect("a maximum matching always exists")
    };
    let div = |n: usize| if n == 0 { 0.0 } else { matches as f64 / n as f64 };
    MeteorAlignment {
        matches,
        chunks,
        precision: div(a.len()),
        recall: div(b.len()),
    }
}

/// Memoised search over candidate positions. State: next candidate index,
/// reference position matched by the previous candidate token, and the set
/// of used reference positions.
struct Aligner<'a> {
    a: &'a [usize],
    b: &'a [usize],
    vocab: usize,
    target: usize,
    memo: HashMap<(usize, Option<usize>, Vec<u64>), Option<usize>>,
}

impl Aligner<'_> {
    fn is_used(used: &[u64], j: usize) -> bool {
        used[j / 64] >> (j % 64) & 1 == 1
    }

    fn toggle(used: &mut [u64], j: usize) {
        used[j / 64] ^= 1 << (j % 64);
    }

    /// Upper bound on further matches from candidate position `i`.
    fn potential(&self, i: usize, used: &[u64]) -> usize {
        let mut free = vec![0usize; self.vocab];
        for (j, &w) in self.b.iter().enumerate() {
            if !Self::is_used(used, j) {
                free[w] += 1;
            }
        }
        let mut bound = 0;
        for &w in &self.a[i..] {
            if free[w] > 0 {
                free[w] -= 1;
                bound += 1;
            }
        }
        bound
    }

    fn min_chunks(&mut self, i: usize, prev: Option<usize>, used: &mut Vec<u64>, matched: usize) -> Option<usize> {
        if matched == self.target {
            return Some(0);
        }
        if i == self.a.len() || matched + self.potential(i, used) < self.target {
            return None;
        }
        let key = (i, prev, used.clone());
        if let Some(&cached) = self.memo.get(&key) {
            return cached;
        }
        let mut best = self.min_chunks(i + 1, None, used, matched);
        for j in 0..self.b.len() {
            if self.b[j] != self.a[i] || Self::is_used(used, j) {
                continue;
            }
            let opens = usize::from(!(j > 0 && prev == Some(j - 1)));
            if best.is_some_and(|b| b <= opens) {
                continue;
            }
            Self::toggle(used, j);
            let rest = self.min_chunks(i + 1, Some(j), used, matched + 1);
            Self::toggle(used, j);
            if let Some(r) = rest {
                let total = r + opens;
                if best.is_none_or(|b| total < b) {
                    best = Some(total);
                }
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Best METEOR score over the references.
pub fn meteor(inst: &ScoringInstance) -> f64 {
    inst.references
        .iter()
        .map(|r| meteor_alignment(&inst.candidate, r).score())
        .fold(0.0, f64::max)
}
