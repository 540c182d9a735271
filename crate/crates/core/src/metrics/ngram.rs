use std::collections::HashMap;
use std::hash::Hash;

/// Counts of every n-gram of one order in a sentence.
#[derive(Debug, Clone)]
pub struct NGramCounts<'a, T> {
    pub n: usize,
    pub counts: HashMap<&'a [T], usize>,
}

impl<'a, T: Eq + Hash> NGramCounts<'a, T> {
    pub fn get(&self, gram: &[T]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Sliding-window n-gram counts. `n` must be at least 1.
pub fn ngram_counts<T: Eq + Hash>(x: &[T], n: usize) -> NGramCounts<'_, T> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut counts = HashMap::new();
    if x.len() >= n {
        for w in x.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    NGramCounts { n, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_examples() {
        let x = ["a", "a", "b"];
        let c1 = ngram_counts(&x, 1);
        assert_eq!((c1.get(&["a"]), c1.get(&["b"])), (2, 1));
        assert_eq!(c1.counts.len(), 2);
        let c2 = ngram_counts(&x, 2);
        assert_eq!((c2.get(&["a", "a"]), c2.get(&["a", "b"])), (1, 1));
        assert_eq!(c2.counts.len(), 2);
        assert!(ngram_counts(&["a"], 2).is_empty());
    }

    proptest! {
        #[test]
        fn total_matches_window_count(x in prop::collection::vec(0u8..4, 0..12), n in 1usize..5) {
            prop_assert_eq!(ngram_counts(&x, n).total(), (x.len() + 1).saturating_sub(n));
        }
    }
}
