//! Stop-word handling: a shipped closed-class function-word list plus
//! task-specific stop words derived from training summaries.

use super::super::corpus::top_frequent_words;
use std::collections::HashSet;

const FUNCTION_WORDS: &str = include_str!("data/function_words.txt");

/// A set of words excluded from content-word scoring.
#[derive(Debug, Clone, Default)]
pub struct StopSet {
    words: HashSet<String>,
}

impl StopSet {
    /// The shipped function-word list only.
    pub fn function_words() -> StopSet {
        StopSet {
            words: FUNCTION_WORDS
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect(),
        }
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> StopSet {
        StopSet {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn insert(&mut self, word: &str) {
        self.words.insert(word.to_string());
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Sorted view, for reports.
    pub fn sorted_words(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.words.iter().map(String::as_str).collect();
        out.sort_unstable();
        out
    }
}

/// Derive the evaluation stop set: words that rank in the `top_k` most
/// frequent summary words AND appear in at least `doc_frac` of the
/// summaries, unioned with the shipped function-word list.
pub fn derive_stopwords(
    train_summaries: &[Vec<String>],
    top_k: usize,
    doc_frac: f64,
) -> StopSet {
    let mut stops = StopSet::function_words();
    if train_summaries.is_empty() {
        return stops;
    }
    let n_docs = train_summaries.len() as f64;
    let top = top_frequent_words(train_summaries, top_k);
    for word in top {
        let docs_with = train_summaries
            .iter()
            .filter(|doc| doc.iter().any(|t| *t == word))
            .count() as f64;
        if docs_with / n_docs >= doc_frac {
            stops.insert(&word);
        }
    }
    stops
}
