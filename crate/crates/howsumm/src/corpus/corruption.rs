//! WER-targeted corruption of token sequences, standing in for a real
//! speech recognizer's error profile.

use super::Vocabulary;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How much noise to inject and of what kind.
///
/// `target_wer` is the fraction of edit operations relative to the input
/// length; `sub_del_ins_mix` weights substitutions, deletions, and
/// insertions and must sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    pub target_wer: f64,
    pub sub_del_ins_mix: [f64; 3],
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(target_wer: f64, seed: u64) -> Self {
        CorruptionSpec {
            target_wer,
            sub_del_ins_mix: [0.6, 0.2, 0.2],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_wer) {
            return Err(Error::Corpus(format!(
                "target_wer must be in [0,1], got {}",
                self.target_wer
            )));
        }
        if self.sub_del_ins_mix.iter().any(|w| *w < 0.0) {
            return Err(Error::Corpus("corruption mix weights must be non-negative".into()));
        }
        let total: f64 = self.sub_del_ins_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Corpus(format!(
                "corruption mix weights must sum to 1, got {total}"
            )));
        }
        Ok(())
    }
}

/// Apply `round(target_wer * len)` edit operations to `tokens`.
///
/// Substitutions replace a token with a random non-special in-vocabulary
/// word (never the original), deletions remove tokens, insertions splice in
/// random words. Substitution and deletion sites are distinct positions of
/// the original sequence, so the applied edit count tracks the Levenshtein
/// distance closely. Deterministic given the seed.
pub fn corrupt_to_wer(
    tokens: &[String],
    spec: &CorruptionSpec,
    vocab: &Vocabulary,
) -> Result<Vec<String>> {
    spec.validate()?;
    if tokens.is_empty() {
        return Err(Error::Corpus("cannot corrupt an empty token sequence".into()));
    }
    let n_edits = (spec.target_wer * tokens.len() as f64).round() as usize;
    if n_edits == 0 {
        return Ok(tokens.to_vec());
    }
    let words = vocab.ranked_words();
    if words.is_empty() {
        return Err(Error::Corpus(
            "vocabulary has no non-special entries to draw replacements from".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Decide the operation of each edit from the mix.
    let mut n_sub = 0usize;
    let mut n_del = 0usize;
    let mut n_ins = 0usize;
    let [w_sub, w_del, _] = spec.sub_del_ins_mix;
    for _ in 0..n_edits {
        let u: f64 = rng.gen();
        if u < w_sub {
            n_sub += 1;
        } else if u < w_sub + w_del {
            n_del += 1;
        } else {
            n_ins += 1;
        }
    }
    // Substitutions and deletions both consume a distinct original position.
    // round(wer * n) <= n, so this never exceeds the sequence length.
    if n_sub + n_del > tokens.len() {
        let overflow = n_sub + n_del - tokens.len();
        n_del -= overflow.min(n_del);
        n_sub = (tokens.len()).saturating_sub(n_del).min(n_sub);
        n_ins = n_edits - n_sub - n_del;
    }

    let mut positions: Vec<usize> = (0..tokens.len()).collect();
    positions.shuffle(&mut rng);
    let sub_positions = &positions[..n_sub];
    let del_positions = &positions[n_sub..n_sub + n_del];

    let mut kind = vec![0u8; tokens.len()]; // 0 keep, 1 sub, 2 del
    for &p in sub_positions {
        kind[p] = 1;
    }
    for &p in del_positions {
        kind[p] = 2;
    }

    let mut out: Vec<String> = Vec::with_capacity(tokens.len() + n_ins);
    for (i, tok) in tokens.iter().enumerate() {
        match kind[i] {
            0 => out.push(tok.clone()),
            1 => out.push(draw_replacement(&mut rng, words, tok)),
            _ => {}
        }
    }
    for _ in 0..n_ins {
        let at = rng.gen_range(0..=out.len());
        let word = words[rng.gen_range(0..words.len())].clone();
        out.insert(at, word);
    }
    Ok(out)
}

fn draw_replacement(rng: &mut ChaCha8Rng, words: &[String], original: &str) -> String {
    // With a single-entry vocabulary equal to the original there is no
    // distinct replacement; fall back to that entry.
    for _ in 0..64 {
        let w = &words[rng.gen_range(0..words.len())];
        if w != original {
            return w.clone();
        }
    }
    words[0].clone()
}
