//! Desk-scale multimodal abstractive summarization.
//!
//! This crate trains and evaluates sequence-to-sequence summarizers over
//! corpora of instructional-video transcripts, reference summaries, and
//! per-segment video feature vectors. Everything is built from scratch on a
//! small reverse-mode autodiff core so that every gradient can be verified
//! against finite differences.
//!
//! The pieces:
//!
//! - [`corpus`] — loading, tokenization, vocabularies, feature files, and a
//!   WER-targeted corruption simulator for ASR-like noise.
//! - [`numcore`] — dense arrays, a gradient tape, GRU / attention / fusion
//!   layers, the Adam optimizer, and finite-difference gradient checking.
//! - [`models`] — the four seq2seq variants (text-only, video projection,
//!   video RNN, hierarchical fusion), training with validation-driven
//!   learning-rate halving, greedy and beam decoding, attention export.
//! - [`baselines`] — n-gram language-model sampling, centroid-based sentence
//!   extraction, and tf-idf nearest-neighbor retrieval.
//! - [`eval`] — ROUGE-L and alignment-based Content F1 with stop-word
//!   derivation.
//! - [`cli`] — the `howsumm` command-line pipeline.
//! - [`synth`] — small synthetic corpora used by the examples and tests.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --release --example end_to_end`.

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod models;
pub mod numcore;
pub mod synth;

use std::path::PathBuf;

/// Crate-wide error type. Messages are prefixed by the module that raised
/// them so CLI diagnostics point at the failing stage.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("numcore: {0}")]
    Numcore(String),
    #[error("models: {0}")]
    Model(String),
    #[error("baselines: {0}")]
    Baseline(String),
    #[error("eval: {0}")]
    Eval(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Write a file via a sibling temp file and rename, so a failed run never
/// leaves a partially written output behind.
pub(crate) fn write_atomic(path: &std::path::Path, content: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
