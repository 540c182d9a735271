use std::fmt::Write;

use super::{bleu_stats, cider, geometric_mean, meteor, rouge_l, rouge_n, CorpusStats, MetricsError, ScoringInstance};

/// Corpus-level scores, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub count: usize,
    /// Pooled BLEU-1..4.
    pub bleu: [f64; 4],
    /// Geometric mean of the pooled BLEU-1..4.
    pub bleu_composite: f64,
    /// Mean ROUGE-1..4.
    pub rouge: [f64; 4],
    pub rouge_l: f64,
    /// Mean CIDEr-1..4.
    pub cider: [f64; 4],
    /// Mean over instances of the per-instance CIDEr mean.
    pub cider_mean: f64,
    pub meteor: f64,
}

impl MetricReport {
    /// Named values in report order: `bleu1..bleu4, bleu, rouge1..rouge4,
    /// rougeL, cider, cider1..cider4, meteor`.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("bleu1", self.bleu[0]),
            ("bleu2", self.bleu[1]),
            ("bleu3", self.bleu[2]),
            ("bleu4", self.bleu[3]),
            ("bleu", self.bleu_composite),
            ("rouge1", self.rouge[0]),
            ("rouge2", self.rouge[1]),
            ("rouge3", self.rouge[2]),
            ("rouge4", self.rouge[3]),
            ("rougeL", self.rouge_l),
            ("cider", self.cider_mean),
            ("cider1", self.cider[0]),
            ("cider2", self.cider[1]),
            ("cider3", self.cider[2]),
            ("cider4", self.cider[3]),
            ("meteor", self.meteor),
        ]
    }

    /// Single-line JSON object with every value ×100 to four decimals, plus
    /// the instance count.
    pub fn to_presentation_json(&self) -> String {
        let mut out = String::from("{");
        for (name, value) in self.named() {
            write!(out, "\"{name}\":{:.4},", value * 100.0).unwrap();
        }
        write!(out, "\"count\":{}}}", self.count).unwrap();
        out
    }
}

/// Scores a whole evaluation set. BLEU pools clipped and total n-gram
/// counts across instances before dividing; every other metric is the mean
/// of per-instance values. CIDEr document frequencies come from the same set.
pub fn corpus_score(instances: &[ScoringInstance]) -> Result<MetricReport, MetricsError> {
    if instances.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let stats = CorpusStats::build(instances);
    let n = instances.len() as f64;

    let mut bleu = [0.0; 4];
    for (order, slot) in (1..=4).zip(bleu.iter_mut()) {
        let (m, t) = instances
            .iter()
            .map(|i| bleu_stats(i, order))
            .fold((0, 0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
        *slot = if t == 0 { 0.0 } else { m as f64 / t as f64 };
    }

    let mut rouge = [0.0; 4];
    let mut cider_n = [0.0; 4];
    let (mut rl, mut cm, mut met) = (0.0, 0.0, 0.0);
    for inst in instances {
        for (order, slot) in (1..=4).zip(rouge.iter_mut()) {
            *slot += rouge_n(inst, order);
        }
        let c = cider(inst, &stats)?;
        for (slot, v) in cider_n.iter_mut().zip(c.per_n) {
            *slot += v;
        }
        cm += c.mean;
        rl += rouge_l(inst);
        met += meteor(inst);
    }
    rouge.iter_mut().chain(cider_n.iter_mut()).for_each(|v| *v /= n);

    Ok(MetricReport {
        count: instances.len(),
        bleu,
        bleu_composite: geometric_mean(&bleu),
        rouge,
        rouge_l: rl / n,
        cider: cider_n,
        cider_mean: cm / n,
        meteor: met / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{bleu_n, inst};

    #[test]
    fn single_instance_matches_sentence_bleu() {
        let i = inst("the the cat sat on a mat", &["the cat sat on the mat"]);
        let r = corpus_score(std::slice::from_ref(&i)).unwrap();
        for n in 1..=4 {
            assert_eq!(r.bleu[n - 1], bleu_n(&i, n));
        }
    }

    #[test]
    fn pooled_bleu() {
        let r = corpus_score(&[inst("a b", &["a b"]), inst("c d", &["e f"])]).unwrap();
        assert_eq!(r.bleu[0], 0.5);
    }

    #[test]
    fn empty_corpus() {
        assert_eq!(corpus_score(&[]), Err(MetricsError::EmptyCorpus));
    }

    #[test]
    fn presentation_format() {
        let r = corpus_score(&[inst("a b c d", &["a b c d"])]).unwrap();
        let json = r.to_presentation_json();
        assert!(json.starts_with("{\"bleu1\":100.0000,"));
        assert!(json.contains("\"rougeL\":100.0000"));
        assert!(json.ends_with("\"count\":1}"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 17);
    }
}
