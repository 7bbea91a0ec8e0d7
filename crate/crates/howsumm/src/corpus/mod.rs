//! Corpus ingestion: tokenization, vocabularies, manifests, feature files,
//! and controlled corruption of transcripts.

mod corruption;
mod features;
mod manifest;

pub use corruption::{corrupt_to_wer, CorruptionSpec};
pub use features::{read_features, read_features_bytes, write_features};
pub use manifest::load_corpus;

use crate::{Error, Result};
use std::collections::HashMap;

/// Reserved vocabulary ids. These occupy ids 0-3 in every vocabulary.
pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

const SPECIALS: [&str; 4] = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];

/// One video's worth of data: transcript tokens, summary tokens, and an
/// optional sequence of per-segment feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalExample {
    pub id: String,
    pub transcript: Vec<String>,
    pub summary: Vec<String>,
    pub features: Option<Vec<Vec<f32>>>,
}

/// Train/val/test splits plus the (uniform) feature dimension, if any split
/// carries features.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub train: Vec<MultimodalExample>,
    pub val: Vec<MultimodalExample>,
    pub test: Vec<MultimodalExample>,
    pub feature_dim: Option<usize>,
}

impl Corpus {
    pub fn split(&self, name: &str) -> Result<&[MultimodalExample]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::Corpus(format!("unknown split '{other}'"))),
        }
    }

    pub fn split_mut(&mut self, name: &str) -> Result<&mut Vec<MultimodalExample>> {
        match name {
            "train" => Ok(&mut self.train),
            "val" => Ok(&mut self.val),
            "test" => Ok(&mut self.test),
            other => Err(Error::Corpus(format!("unknown split '{other}'"))),
        }
    }
}

/// Lowercase text and split it into tokens. Runs of alphanumeric characters
/// become tokens; every other non-whitespace character becomes a standalone
/// token. Total on any UTF-8 input.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_lowercase().collect());
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Which fields of the training examples feed vocabulary counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabScope {
    /// Transcripts and summaries jointly (the default).
    Joint,
    Transcripts,
    Summaries,
}

/// Frequency-ranked word-to-id map with the four reserved symbols pinned at
/// ids 0-3. Non-special entries are sorted by descending training-corpus
/// frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_ranked(ranked: Vec<String>) -> Self {
        let mut entries: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        entries.extend(ranked);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    /// Id for a word; out-of-vocabulary words map to UNK.
    pub fn id(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// The word stored at `id`.
    pub fn word(&self, id: u32) -> Result<&str> {
        self.entries
            .get(id as usize)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Corpus(format!("id out of range: {id}")))
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// Inverse of `encode`. PAD/BOS/EOS are dropped from the output; ids
    /// beyond the table are an error.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let word = self.word(id)?;
            if id != PAD_ID && id != BOS_ID && id != EOS_ID {
                out.push(word.to_string());
            }
        }
        Ok(out)
    }

    /// Non-special entries in rank order (most frequent first).
    pub fn ranked_words(&self) -> &[String] {
        &self.entries[SPECIALS.len()..]
    }

    pub fn words(&self) -> &[String] {
        &self.entries
    }
}

/// Build a vocabulary of the `size_cap` most frequent words (plus the four
/// specials) over the chosen fields of the training examples.
pub fn build_vocab(
    examples: &[MultimodalExample],
    size_cap: usize,
    scope: VocabScope,
) -> Result<Vocabulary> {
    if examples.is_empty() {
        return Err(Error::Corpus("empty corpus".into()));
    }
    if size_cap == 0 {
        return Err(Error::Corpus("vocabulary size_cap must be >= 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for ex in examples {
        let fields: [&[String]; 2] = match scope {
            VocabScope::Joint => [&ex.transcript, &ex.summary],
            VocabScope::Transcripts => [&ex.transcript, &[]],
            VocabScope::Summaries => [&ex.summary, &[]],
        };
        for field in fields {
            for tok in field {
                if !SPECIALS.contains(&tok.as_str()) {
                    *counts.entry(tok).or_insert(0) += 1;
                }
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(size_cap);
    Ok(Vocabulary::from_ranked(
        ranked.into_iter().map(|(w, _)| w.to_string()).collect(),
    ))
}

/// First `min(limit, len)` tokens, order preserved.
pub fn truncate(tokens: &[String], limit: usize) -> &[String] {
    &tokens[..tokens.len().min(limit)]
}

/// The `k` most frequent words across `docs`, descending count with
/// lexicographic tie-break. Returns fewer than `k` when the vocabulary is
/// smaller.
pub fn top_frequent_words<S: AsRef<str>>(docs: &[Vec<S>], k: usize) -> Vec<String> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for tok in doc {
            *counts.entry(tok.as_ref()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(k);
    ranked.into_iter().map(|(w, _)| w.to_string()).collect()
}

/// Convenience for tests and fixtures: split a string on whitespace.
pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(|t| t.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, transcript: &str, summary: &str) -> MultimodalExample {
        MultimodalExample {
            id: id.to_string(),
            transcript: toks(transcript),
            summary: toks(summary),
            features: None,
        }
    }

    #[test]
    fn tokenize_splits_punctuation() {
        assert_eq!(tokenize("Cut the peppers."), toks("cut the peppers ."));
    }

    #[test]
    fn tokenize_empty() {
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn tokenize_hyphens() {
        assert_eq!(tokenize("how-to video"), toks("how - to video"));
    }

    #[test]
    fn tokenize_collapses_whitespace() {
        assert_eq!(tokenize("  a \t b\n c  "), toks("a b c"));
    }

    #[test]
    fn vocab_ranks_by_count_then_word() {
        // counts: the:5, cat:3, sat:2, mat:1
        let e = ex(
            "0",
            "the the the cat cat sat",
            "the the cat sat mat",
        );
        let v = build_vocab(&[e], 3, VocabScope::Joint).unwrap();
        assert_eq!(
            v.words(),
            &["<pad>", "<s>", "</s>", "<unk>", "the", "cat", "sat"]
        );
        assert_eq!(v.id("mat"), UNK_ID);
        assert_eq!(v.id("the"), 4);
    }

    #[test]
    fn vocab_cap_zero_rejected() {
        let e = ex("0", "a", "b");
        assert!(build_vocab(&[e], 0, VocabScope::Joint).is_err());
    }

    #[test]
    fn vocab_empty_corpus_rejected() {
        let err = build_vocab(&[], 10, VocabScope::Joint).unwrap_err();
        assert!(err.to_string().contains("empty corpus"));
    }

    #[test]
    fn vocab_ties_break_lexicographically() {
        let e = ex("0", "b a", "a b");
        let v = build_vocab(&[e], 2, VocabScope::Joint).unwrap();
        assert_eq!(v.ranked_words(), &["a", "b"]);
    }

    #[test]
    fn vocab_permutation_invariant() {
        let e1 = ex("0", "a b c", "x");
        let e2 = ex("1", "c c d", "y");
        let v1 = build_vocab(&[e1.clone(), e2.clone()], 10, VocabScope::Joint).unwrap();
        let v2 = build_vocab(&[e2, e1], 10, VocabScope::Joint).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn encode_maps_oov_to_unk() {
        let e = ex(
            "0",
            "the the the cat cat sat",
            "the the cat sat mat",
        );
        let v = build_vocab(&[e], 3, VocabScope::Joint).unwrap();
        assert_eq!(v.encode(&toks("the mat")), vec![4, UNK_ID]);
        assert_eq!(v.encode(&[]), Vec::<u32>::new());
        assert_eq!(v.decode(&[4, 5]).unwrap(), toks("the cat"));
    }

    #[test]
    fn decode_out_of_range() {
        let e = ex("0", "a", "b");
        let v = build_vocab(&[e], 2, VocabScope::Joint).unwrap();
        let err = v.decode(&[99]).unwrap_err();
        assert!(err.to_string().contains("id out of range"));
    }

    #[test]
    fn decode_skips_specials() {
        let e = ex("0", "a", "b");
        let v = build_vocab(&[e], 2, VocabScope::Joint).unwrap();
        let ids = vec![PAD_ID, BOS_ID, 4, EOS_ID];
        assert_eq!(v.decode(&ids).unwrap(), toks("a"));
    }

    #[test]
    fn truncate_cases() {
        let long: Vec<String> = (0..291).map(|i| format!("w{i}")).collect();
        let t = truncate(&long, 200);
        assert_eq!(t.len(), 200);
        assert_eq!(t, &long[..200]);

        let short = toks("a b c d e f g h i j");
        assert_eq!(truncate(&short, 600), &short[..]);
        assert_eq!(truncate(&toks("a b c"), 2), &toks("a b")[..]);
    }

    #[test]
    fn top_frequent_counts_by_hand() {
        let docs = vec![toks("a a b"), toks("b b c")];
        assert_eq!(top_frequent_words(&docs, 2), toks("b a"));
        // k larger than the distinct vocabulary ranks everything
        assert_eq!(top_frequent_words(&docs, 10), toks("b a c"));
    }
}
