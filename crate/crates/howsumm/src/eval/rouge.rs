//! ROUGE-L: precision/recall/F over the longest common subsequence.

use super::Prf;
use crate::{Error, Result};

/// Length of the longest common subsequence, O(|a|*|b|) dynamic program
/// with a two-row table.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Summary-level ROUGE-L. P = LCS/|hyp| (0 for an empty hypothesis),
/// R = LCS/|ref|, F = (1+beta^2) P R / (R + beta^2 P), with F = 0 when both
/// P and R are 0.
pub fn rouge_l(hyp: &[String], reference: &[String], beta: f64) -> Result<Prf> {
    if reference.is_empty() {
        return Err(Error::Eval("rouge_l: empty reference".into()));
    }
    let lcs = lcs_length(hyp, reference) as f64;
    let precision = if hyp.is_empty() {
        0.0
    } else {
        lcs / hyp.len() as f64
    };
    let recall = lcs / reference.len() as f64;
    let b2 = beta * beta;
    let denom = recall + b2 * precision;
    let f = if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    };
    Ok(Prf { precision, recall, f })
}
