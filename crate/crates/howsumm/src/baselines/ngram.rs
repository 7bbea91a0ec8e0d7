//! N-gram language model over training summaries with add-k smoothing,
//! used as the random sampling baseline.

use crate::corpus::{BOS_TOKEN, EOS_TOKEN};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};

/// Counts of n-grams and their (n-1)-gram contexts, gathered with n-1
/// leading BOS pads and a terminal EOS per summary.
#[derive(Debug, Clone)]
pub struct NgramLM {
    order: usize,
    k: f64,
    continuations: HashMap<Vec<String>, HashMap<String, u64>>,
    context_totals: HashMap<Vec<String>, u64>,
    /// sampling support: every summary word type plus EOS, sorted
    vocab: Vec<String>,
}

/// Count n-grams over the summaries. `k` is the add-k smoothing constant.
pub fn train_ngram_lm(summaries: &[Vec<String>], order: usize, k: f64) -> Result<NgramLM> {
    if order == 0 {
        return Err(Error::Baseline("ngram order must be >= 1".into()));
    }
    if summaries.is_empty() {
        return Err(Error::Baseline("no summaries to train on".into()));
    }
    if k < 0.0 {
        return Err(Error::Baseline("smoothing constant must be >= 0".into()));
    }
    let mut continuations: HashMap<Vec<String>, HashMap<String, u64>> = HashMap::new();
    let mut context_totals: HashMap<Vec<String>, u64> = HashMap::new();
    let mut vocab: BTreeSet<String> = BTreeSet::new();
    vocab.insert(EOS_TOKEN.to_string());
    for summary in summaries {
        let mut seq: Vec<String> = vec![BOS_TOKEN.to_string(); order - 1];
        seq.extend(summary.iter().cloned());
        seq.push(EOS_TOKEN.to_string());
        for tok in summary {
            vocab.insert(tok.clone());
        }
        for i in (order - 1)..seq.len() {
            let context = seq[i - (order - 1)..i].to_vec();
            *continuations
                .entry(context.clone())
                .or_default()
                .entry(seq[i].clone())
                .or_insert(0) += 1;
            *context_totals.entry(context).or_insert(0) += 1;
        }
    }
    Ok(NgramLM {
        order,
        k,
        continuations,
        context_totals,
        vocab: vocab.into_iter().collect(),
    })
}

impl NgramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn context_total(&self, context: &[String]) -> u64 {
        self.context_totals.get(context).copied().unwrap_or(0)
    }

    /// Add-k conditional probability of `word` given `context`.
    pub fn conditional(&self, context: &[String], word: &str) -> Result<f64> {
        let total = self.context_total(context);
        let v = self.vocab.len() as f64;
        if total == 0 && self.k == 0.0 {
            return Err(Error::Baseline(format!(
                "zero-probability context {context:?} with k=0"
            )));
        }
        let count = self
            .continuations
            .get(context)
            .and_then(|m| m.get(word))
            .copied()
            .unwrap_or(0) as f64;
        Ok((count + self.k) / (total as f64 + self.k * v))
    }

    /// The distribution over the sampling vocabulary for a context.
    pub fn distribution(&self, context: &[String]) -> Result<Vec<(&str, f64)>> {
        self.vocab
            .iter()
            .map(|w| self.conditional(context, w).map(|p| (w.as_str(), p)))
            .collect()
    }
}

/// Ancestral sampling until EOS or `max_len` tokens. The returned sequence
/// contains neither BOS nor the terminating EOS.
pub fn sample_lm(lm: &NgramLM, seed: u64, max_len: usize) -> Result<Vec<String>> {
    if max_len == 0 {
        return Err(Error::Baseline("max_len must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut context: Vec<String> = vec![BOS_TOKEN.to_string(); lm.order - 1];
    let mut out = Vec::new();
    while out.len() < max_len {
        let dist = lm.distribution(&context)?;
        let mut u: f64 = rng.gen();
        let mut chosen = dist
            .last()
            .map(|(w, _)| *w)
            .ok_or_else(|| Error::Baseline("empty sampling vocabulary".into()))?;
        for (w, p) in &dist {
            if u < *p {
                chosen = w;
                break;
            }
            u -= p;
        }
        if chosen == EOS_TOKEN {
            break;
        }
        out.push(chosen.to_string());
        if lm.order > 1 {
            context.remove(0);
            context.push(out.last().unwrap().clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toks;

    #[test]
    fn bigram_counts_by_hand() {
        let lm = train_ngram_lm(&[toks("a b")], 2, 0.0).unwrap();
        assert_eq!(lm.context_total(&toks("<s>")), 1);
        assert_eq!(lm.context_total(&toks("a")), 1);
        assert_eq!(lm.context_total(&toks("b")), 1);
        assert_eq!(lm.conditional(&toks("<s>"), "a").unwrap(), 1.0);
        assert_eq!(lm.conditional(&toks("a"), "b").unwrap(), 1.0);
        assert_eq!(lm.conditional(&toks("b"), "</s>").unwrap(), 1.0);
    }

    #[test]
    fn unseen_context_with_zero_k_errors() {
        let lm = train_ngram_lm(&[toks("a b")], 2, 0.0).unwrap();
        let err = lm.conditional(&toks("zzz"), "a").unwrap_err();
        assert!(err.to_string().contains("zero-probability"));
    }

    #[test]
    fn conditionals_sum_to_one_under_add_k() {
        let lm = train_ngram_lm(&[toks("a b a"), toks("a c")], 2, 0.01).unwrap();
        for context in [toks("a"), toks("b"), toks("zzz")] {
            let total: f64 = lm
                .distribution(&context)
                .unwrap()
                .iter()
                .map(|(_, p)| p)
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "context {context:?}: {total}");
        }
    }

    #[test]
    fn degenerate_chain_always_reproduced() {
        let lm = train_ngram_lm(&[toks("a b c")], 2, 0.0).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_lm(&lm, seed, 50).unwrap(), toks("a b c"));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let lm = train_ngram_lm(&[toks("a b"), toks("a c"), toks("b d a")], 3, 0.01).unwrap();
        assert_eq!(
            sample_lm(&lm, 7, 50).unwrap(),
            sample_lm(&lm, 7, 50).unwrap()
        );
    }

    #[test]
    fn two_path_frequencies_match_conditionals() {
        // P(b|a) = P(c|a) = 0.5 with k=0; Monte Carlo over 10k samples
        let lm = train_ngram_lm(&[toks("a b"), toks("a c")], 2, 0.0).unwrap();
        let mut b_count = 0usize;
        let n = 10_000;
        for seed in 0..n {
            let s = sample_lm(&lm, seed as u64, 10).unwrap();
            assert_eq!(s[0], "a");
            match s[1].as_str() {
                "b" => b_count += 1,
                "c" => {}
                other => panic!("unexpected token {other}"),
            }
        }
        let freq = b_count as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.03, "freq {freq}");
    }

    #[test]
    fn never_emits_bos_and_respects_max_len() {
        let lm = train_ngram_lm(&[toks("a a a a a a")], 2, 0.05).unwrap();
        for seed in 0..20 {
            let s = sample_lm(&lm, seed, 4).unwrap();
            assert!(s.len() <= 4);
            assert!(s.iter().all(|t| t != BOS_TOKEN && t != EOS_TOKEN));
        }
    }
}
