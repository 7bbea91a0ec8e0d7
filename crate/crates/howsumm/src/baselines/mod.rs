//! Non-neural reference systems: language-model sampling, rule-based
//! sentence extraction, and tf-idf next-neighbor retrieval.

mod ngram;
mod tfidf;

pub use ngram::{sample_lm, train_ngram_lm, NgramLM};
pub use tfidf::{extract_sentence, nearest_neighbor_summary, TfidfIndex};

/// Defaults for the sampling baseline: a trigram model with light add-k
/// smoothing, capped near 1.5x the typical summary length.
pub const LM_ORDER: usize = 3;
pub const LM_SMOOTHING: f64 = 0.01;
pub const LM_MAX_LEN: usize = 50;
