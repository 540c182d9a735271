//! Metric checks against brute-force counters and the stated invariants.

use attnbeam::metrics::{
    bleu_n, cider, corpus_score, meteor, meteor_alignment, rouge_l, rouge_n, CorpusStats, ScoringInstance,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn inst(cand: &str, refs: &[&str]) -> ScoringInstance {
    ScoringInstance {
        candidate: words(cand),
        references: refs.iter().map(|r| words(r)).collect(),
    }
}

/// Counts occurrences of `gram` in `x` by scanning every window.
fn count(x: &[String], gram: &[String]) -> usize {
    if gram.len() > x.len() {
        return 0;
    }
    (0..=x.len() - gram.len()).filter(|&i| &x[i..i + gram.len()] == gram).count()
}

fn windows(x: &[String], n: usize) -> Vec<Vec<String>> {
    if n > x.len() {
        return vec![];
    }
    let mut out: Vec<Vec<String>> = (0..=x.len() - n).map(|i| x[i..i + n].to_vec()).collect();
    out.sort();
    out.dedup();
    out
}

fn brute_bleu(inst: &ScoringInstance, n: usize) -> f64 {
    let grams = windows(&inst.candidate, n);
    let total: usize = grams.iter().map(|g| count(&inst.candidate, g)).sum();
    if total == 0 {
        return 0.0;
    }
    let clipped: usize = grams
        .iter()
        .map(|g| {
            let best = inst.references.iter().map(|r| count(r, g)).max().unwrap_or(0);
            count(&inst.candidate, g).min(best)
        })
        .sum();
    clipped as f64 / total as f64
}

fn brute_rouge(inst: &ScoringInstance, n: usize) -> f64 {
    let (mut hit, mut total) = (0, 0);
    for r in &inst.references {
        for g in windows(r, n) {
            hit += count(r, &g).min(count(&inst.candidate, &g));
            total += count(r, &g);
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Every partial injective matching, scored as (matches, -chunks).
fn brute_meteor_alignment(a: &[String], b: &[String]) -> (usize, usize) {
    fn go(a: &[String], b: &[String], i: usize, used: &mut Vec<bool>, pairs: &mut Vec<(usize, usize)>, best: &mut (usize, usize)) {
        if i == a.len() {
            let m = pairs.len();
            let chunks = pairs
                .iter()
                .enumerate()
                .filter(|(k, &(ci, rj))| *k == 0 || pairs[k - 1] != (ci - 1, rj.wrapping_sub(1)))
                .count();
            if m > best.0 || (m == best.0 && chunks < best.1) {
                *best = (m, chunks);
            }
            return;
        }
        go(a, b, i + 1, used, pairs, best);
        for j in 0..b.len() {
            if !used[j] && a[i] == b[j] {
                used[j] = true;
                pairs.push((i, j));
                go(a, b, i + 1, used, pairs, best);
                pairs.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0);
    go(a, b, 0, &mut vec![false; b.len()], &mut vec![], &mut best);
    best
}

fn random_sentence(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| format!("t{}", rng.random_range(0..vocab))).collect()
}

fn random_instance(rng: &mut ChaCha8Rng, max_len: usize) -> ScoringInstance {
    let vocab = rng.random_range(2..=5);
    let refs = rng.random_range(1..=3);
    ScoringInstance {
        candidate: random_sentence(rng, vocab, max_len),
        references: (0..refs).map(|_| random_sentence(rng, vocab, max_len)).collect(),
    }
}

#[test]
fn hand_computed_values() {
    assert!((bleu_n(&inst("the the cat", &["the cat"]), 1) - 2.0 / 3.0).abs() <= 1e-9);
    assert!((rouge_n(&inst("the cat", &["the cat sat"]), 1) - 2.0 / 3.0).abs() <= 1e-9);
    assert!((rouge_n(&inst("the cat", &["the cat", "a dog"]), 1) - 0.5).abs() <= 1e-9);
    assert!((rouge_l(&inst("a b c d", &["a c d e"])) - 0.75).abs() <= 1e-9);
    assert!((meteor(&inst("a b c", &["a b c"])) - 0.981_481_481_481).abs() <= 1e-9);
    assert!((meteor(&inst("b a", &["a b"])) - 0.5).abs() <= 1e-9);
}

#[test]
fn counts_agree_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let i = random_instance(&mut rng, 8);
        for n in 1..=4 {
            assert!((bleu_n(&i, n) - brute_bleu(&i, n)).abs() <= 1e-12, "{i:?} n={n}");
            assert!((rouge_n(&i, n) - brute_rouge(&i, n)).abs() <= 1e-12, "{i:?} n={n}");
        }
    }
}

#[test]
fn meteor_alignment_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let vocab = rng.random_range(1..=3);
        let a = random_sentence(&mut rng, vocab, 6);
        let b = random_sentence(&mut rng, vocab, 6);
        let al = meteor_alignment(&a, &b);
        assert_eq!((al.matches, al.chunks), brute_meteor_alignment(&a, &b), "{a:?} / {b:?}");
        assert!(al.chunks <= al.matches);
    }
}

fn all_values(i: &ScoringInstance, stats: &CorpusStats) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=4).flat_map(|n| [bleu_n(i, n), rouge_n(i, n)]).collect();
    v.push(rouge_l(i));
    v.push(meteor(i));
    v.extend(cider(i, stats).unwrap().per_n);
    v
}

fn instance_strategy() -> impl Strategy<Value = ScoringInstance> {
    let sentence = || prop::collection::vec(0u8..5, 0..7);
    (sentence(), prop::collection::vec(sentence(), 1..4)).prop_map(|(c, rs)| {
        let w = |s: Vec<u8>| s.into_iter().map(|t| format!("w{t}")).collect::<Vec<_>>();
        ScoringInstance {
            candidate: w(c),
            references: rs.into_iter().map(w).collect(),
        }
    })
}

proptest! {
    #[test]
    fn values_stay_in_unit_interval(insts in prop::collection::vec(instance_strategy(), 1..5)) {
        let stats = CorpusStats::build(&insts);
        for i in &insts {
            for v in all_values(i, &stats) {
                prop_assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }
        let report = corpus_score(&insts).unwrap();
        for (_, v) in report.named() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn relabeling_changes_nothing(insts in prop::collection::vec(instance_strategy(), 1..4), shift in 1u8..5) {
        let relabel = |s: &[String]| -> Vec<String> {
            s.iter()
                .map(|t| {
                    let k: u8 = t[1..].parse().unwrap();
                    format!("z{}", (k + shift) % 5)
                })
                .collect()
        };
        let mapped: Vec<ScoringInstance> = insts
            .iter()
            .map(|i| ScoringInstance {
                candidate: relabel(&i.candidate),
                references: i.references.iter().map(|r| relabel(r)).collect(),
            })
            .collect();
        let (s1, s2) = (CorpusStats::build(&insts), CorpusStats::build(&mapped));
        for (a, b) in insts.iter().zip(&mapped) {
            // CIDEr sums in n-gram order, which relabeling permutes.
            for (x, y) in all_values(a, &s1).into_iter().zip(all_values(b, &s2)) {
                prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn extra_reference_never_hurts(i in instance_strategy(), extra in prop::collection::vec(0u8..5, 0..7)) {
        let mut more = i.clone();
        more.references.push(extra.into_iter().map(|t| format!("w{t}")).collect());
        for n in 1..=4 {
            prop_assert!(bleu_n(&more, n) >= bleu_n(&i, n));
        }
        prop_assert!(meteor(&more) >= meteor(&i));
        prop_assert!(rouge_l(&more) >= rouge_l(&i));
    }

    #[test]
    fn duplicated_corpus_scores_the_same(insts in prop::collection::vec(instance_strategy(), 1..5)) {
        let twice: Vec<_> = insts.iter().chain(&insts).cloned().collect();
        let (a, b) = (corpus_score(&insts).unwrap(), corpus_score(&twice).unwrap());
        prop_assert_eq!(a.bleu, b.bleu);
        prop_assert_eq!(a.bleu_composite, b.bleu_composite);
        for n in 0..4 {
            prop_assert!((a.rouge[n] - b.rouge[n]).abs() <= 1e-12);
        }
        prop_assert!((a.rouge_l - b.rouge_l).abs() <= 1e-12);
        prop_assert!((a.meteor - b.meteor).abs() <= 1e-12);
    }

    #[test]
    fn candidate_equal_to_reference(r in prop::collection::vec(0u8..5, 1..7), others in prop::collection::vec(instance_strategy(), 1..3)) {
        let r: Vec<String> = r.into_iter().map(|t| format!("w{t}")).collect();
        let own = ScoringInstance { candidate: r.clone(), references: vec![r.clone()] };
        let mut corpus = vec![own.clone()];
        corpus.extend(others);
        let stats = CorpusStats::build(&corpus);
        let len = r.len();
        for n in 1..=len.min(4) {
            prop_assert_eq!(bleu_n(&own, n), 1.0);
        }
        prop_assert_eq!(rouge_l(&own), 1.0);
        prop_assert!(meteor(&own) >= 1.0 - 0.5 * (1.0 / len as f64).powi(3) - 1e-12);
        let c = cider(&own, &stats).unwrap();
        for n in 1..=4 {
            let norm = attnbeam::metrics::TfIdfVector::new(&r, n, &stats).norm();
            if norm > 0.0 {
                prop_assert!((c.per_n[n - 1] - 1.0).abs() <= 1e-12);
            }
        }
    }
}
