//! Desk-scale synthetic captioning data.
//!
//! Features are drawn uniformly from `[-1, 1)`. The caption is a pure
//! function of the grid: pixel `p` contributes a word when its second feature
//! exceeds `-0.5` (always, when `dim == 1`), and the word index is the first
//! feature bucketed into `vocab_size` equal bins. Pixels are visited in order
//! and at least the first pixel always speaks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CaptionRecord, FeatureGrid};

/// Surface form of synthetic word `index`.
pub fn synthetic_word(index: usize) -> String {
    format!("w{index:02}")
}

/// Caption tokens implied by a grid under the synthetic rule.
pub fn synthetic_caption(grid: &FeatureGrid, vocab_size: usize, max_len: usize) -> Vec<String> {
    let word_of = |p: usize| {
        let x = f64::from(grid.row(p)[0]);
        let bin = ((x + 1.0) / 2.0 * vocab_size as f64).floor();
        synthetic_word((bin.max(0.0) as usize).min(vocab_size - 1))
    };
    let speaks = |p: usize| grid.dim() == 1 || grid.row(p)[1] > -0.5;
    let mut caption: Vec<String> = (0..grid.pixels())
        .filter(|&p| speaks(p))
        .map(word_of)
        .collect();
    if caption.is_empty() {
        caption.push(word_of(0));
    }
    caption.truncate(max_len);
    caption
}

/// Generates `n_items` records whose captions are derived from their features.
///
/// # Panics
///
/// If any size argument is zero or `vocab_size < 5`.
pub fn gen_synthetic(
    seed: u64,
    n_items: usize,
    vocab_size: usize,
    pixels: usize,
    dim: usize,
    max_len: usize,
) -> Vec<CaptionRecord> {
    assert!(
        n_items > 0 && pixels > 0 && dim > 0 && max_len > 0,
        "synthetic sizes must be positive"
    );
    assert!(vocab_size >= 5, "vocab_size must be at least 5");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_items)
        .map(|i| {
            let values: Vec<f32> = (0..pixels * dim)
                .map(|_| rng.random_range(-1.0f32..1.0))
                .collect();
            let grid = FeatureGrid::new(pixels, dim, values).expect("finite synthetic features");
            let caption = synthetic_caption(&grid, vocab_size, max_len);
            CaptionRecord {
                id: format!("item-{i:04}"),
                features: grid,
                refs: vec![caption],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::save_features;

    #[test]
    fn deterministic_under_seed() {
        let a = gen_synthetic(7, 8, 20, 4, 8, 50);
        let b = gen_synthetic(7, 8, 20, 4, 8, 50);
        assert_eq!(a, b);
        let bytes = |rs: &[CaptionRecord]| -> Vec<u8> {
            rs.iter().flat_map(|r| save_features(&r.features)).collect()
        };
        assert_eq!(bytes(&a), bytes(&b));
    }

    #[test]
    fn seed_changes_data() {
        assert_ne!(gen_synthetic(1, 8, 20, 4, 8, 50), gen_synthetic(2, 8, 20, 4, 8, 50));
    }

    #[test]
    fn tokens_come_from_vocab() {
        let recs = gen_synthetic(3, 8, 20, 4, 8, 50);
        assert_eq!(recs.len(), 8);
        let vocab: Vec<String> = (0..20).map(synthetic_word).collect();
        for r in &recs {
            assert_eq!(r.refs.len(), 1);
            assert!(!r.refs[0].is_empty() && r.refs[0].len() <= 4);
            assert!(r.refs[0].iter().all(|t| vocab.contains(t)));
        }
    }

    #[test]
    fn captions_are_functions_of_features() {
        for r in gen_synthetic(11, 16, 12, 5, 3, 3) {
            assert_eq!(r.refs[0], synthetic_caption(&r.features, 12, 3));
            assert!(r.refs[0].len() <= 3);
        }
    }

    #[test]
    fn single_dim_grids_speak_every_pixel() {
        for r in gen_synthetic(5, 4, 6, 3, 1, 10) {
            assert_eq!(r.refs[0].len(), 3);
        }
    }
}
