//! Summary evaluation: ROUGE-L and alignment-based Content F1, with
//! per-corpus aggregation and TSV reporting.

mod align;
mod rouge;
mod stem;
mod stopwords;

pub use align::{align, AlignedPair, Alignment, MatchKind};
pub use rouge::{lcs_length, rouge_l};
pub use stem::stem;
pub use stopwords::{derive_stopwords, StopSet};

use crate::{Error, Result};
use rayon::prelude::*;
use std::path::Path;

/// Precision / recall / F triple.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// F1 over content words matched by the monolingual alignment.
///
/// The alignment is computed over the full sequences first; stop words are
/// filtered afterwards, and only pairs whose two endpoints both survive
/// count as matches. Conventions: both sides empty of content words scores
/// 1, one side empty scores 0.
pub fn content_f1(hyp: &[String], reference: &[String], stops: &StopSet) -> Prf {
    let alignment = align(hyp, reference);
    let hyp_content = hyp.iter().filter(|w| !stops.contains(w)).count();
    let ref_content = reference.iter().filter(|w| !stops.contains(w)).count();
    if hyp_content == 0 && ref_content == 0 {
        return Prf { precision: 1.0, recall: 1.0, f: 1.0 };
    }
    let matched = alignment
        .pairs
        .iter()
        .filter(|p| !stops.contains(&hyp[p.hyp]) && !stops.contains(&reference[p.reference]))
        .count() as f64;
    let precision = if hyp_content == 0 { 0.0 } else { matched / hyp_content as f64 };
    let recall = if ref_content == 0 { 0.0 } else { matched / ref_content as f64 };
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Prf { precision, recall, f }
}

/// Scores for one hypothesis/reference pair.
#[derive(Debug, Clone)]
pub struct ExampleScores {
    pub id: String,
    pub rouge: Prf,
    pub content: Prf,
}

/// Per-example scores plus their macro averages.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub per_example: Vec<ExampleScores>,
    pub macro_rouge: Prf,
    pub macro_content: Prf,
}

impl EvalReport {
    /// TSV rendering: one row per example and a final `macro` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\trouge_p\trouge_r\trouge_f\tcf1_p\tcf1_r\tcf1_f\n");
        let row = |id: &str, r: &Prf, c: &Prf| {
            format!(
                "{id}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                r.precision, r.recall, r.f, c.precision, c.recall, c.f
            )
        };
        for ex in &self.per_example {
            out.push_str(&row(&ex.id, &ex.rouge, &ex.content));
        }
        out.push_str(&row("macro", &self.macro_rouge, &self.macro_content));
        out
    }
}

fn macro_mean(scores: impl Iterator<Item = Prf> + Clone, n: usize) -> Prf {
    if n == 0 {
        return Prf::default();
    }
    let nf = n as f64;
    Prf {
        precision: scores.clone().map(|s| s.precision).sum::<f64>() / nf,
        recall: scores.clone().map(|s| s.recall).sum::<f64>() / nf,
        f: scores.map(|s| s.f).sum::<f64>() / nf,
    }
}

/// Score parallel lists of tokenized hypotheses and references.
pub fn evaluate_lines(
    hyps: &[Vec<String>],
    refs: &[Vec<String>],
    stops: &StopSet,
    beta: f64,
) -> Result<EvalReport> {
    if hyps.len() != refs.len() {
        return Err(Error::Eval(format!(
            "line-count mismatch ({} hypotheses vs {} references)",
            hyps.len(),
            refs.len()
        )));
    }
    let per_example: Vec<ExampleScores> = hyps
        .par_iter()
        .zip(refs.par_iter())
        .enumerate()
        .map(|(i, (hyp, reference))| {
            let rouge = rouge_l(hyp, reference, beta)?;
            let content = content_f1(hyp, reference, stops);
            Ok(ExampleScores { id: i.to_string(), rouge, content })
        })
        .collect::<Result<_>>()?;
    let n = per_example.len();
    Ok(EvalReport {
        macro_rouge: macro_mean(per_example.iter().map(|e| e.rouge), n),
        macro_content: macro_mean(per_example.iter().map(|e| e.content), n),
        per_example,
    })
}

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

/// Score a hypothesis file against a reference file (one tokenized summary
/// per line, line i aligned across files).
pub fn evaluate_corpus(
    hyp_path: impl AsRef<Path>,
    ref_path: impl AsRef<Path>,
    stops: &StopSet,
    beta: f64,
) -> Result<EvalReport> {
    let hyps = read_token_lines(hyp_path.as_ref())?;
    let refs = read_token_lines(ref_path.as_ref())?;
    evaluate_lines(&hyps, &refs, stops, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toks;

    fn worked_stopset() -> StopSet {
        StopSet::from_words([
            "learn", "how", "to", "from", "an", "expert", "the", "with", "a",
        ])
    }

    #[test]
    fn content_f1_full_overlap() {
        let reference = toks("learn how to cut peppers from an expert chef");
        let hyp = toks("learn to cut the peppers with a chef");
        let s = content_f1(&hyp, &reference, &worked_stopset());
        assert!((s.f - 1.0).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn content_f1_partial_overlap() {
        // "chop" and "cut" share no stem: matched content = {peppers, chef}
        let reference = toks("learn how to cut peppers from an expert chef");
        let hyp = toks("learn to chop the peppers with a chef");
        let s = content_f1(&hyp, &reference, &worked_stopset());
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.f - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn content_f1_stop_only_hypothesis() {
        let reference = toks("cut peppers");
        let hyp = toks("the a an");
        let s = content_f1(&hyp, &reference, &StopSet::function_words());
        assert_eq!(s.f, 0.0);
    }

    #[test]
    fn content_f1_both_sides_empty() {
        let s = content_f1(&toks("the a"), &toks("an of"), &StopSet::function_words());
        assert_eq!((s.precision, s.recall, s.f), (1.0, 1.0, 1.0));
    }

    #[test]
    fn content_f1_stop_word_insertion_invariance() {
        let stops = StopSet::function_words();
        let reference = toks("cut peppers quickly");
        let hyp = toks("cut the peppers");
        let base = content_f1(&hyp, &reference, &stops);
        let padded = toks("the cut the peppers of");
        let s = content_f1(&padded, &reference, &stops);
        assert_eq!(base, s);
    }

    #[test]
    fn evaluate_lines_hand_computed() {
        let stops = StopSet::function_words();
        let hyps = vec![toks("cut the peppers"), toks("wash the pan"), toks("x y z")];
        let refs = vec![toks("cut the peppers"), toks("wash a pan ."), toks("p q")];
        let report = evaluate_lines(&hyps, &refs, &stops, 1.0).unwrap();

        // line 1: identical
        assert!((report.per_example[0].rouge.f - 1.0).abs() < 1e-12);
        assert!((report.per_example[0].content.f - 1.0).abs() < 1e-12);
        // line 2: LCS = {wash, pan} -> P=2/3, R=1/2, F=4/7;
        // content: hyp {wash, pan}, ref {wash, pan, .} -> P=1, R=2/3, F=0.8
        assert!((report.per_example[1].rouge.f - 4.0 / 7.0).abs() < 1e-12);
        assert!((report.per_example[1].content.precision - 1.0).abs() < 1e-12);
        assert!((report.per_example[1].content.f - 0.8).abs() < 1e-12);
        // line 3: disjoint
        assert_eq!(report.per_example[2].rouge.f, 0.0);
        assert_eq!(report.per_example[2].content.f, 0.0);
        // macro = mean of per-example
        let want = (1.0 + 4.0 / 7.0) / 3.0;
        assert!((report.macro_rouge.f - want).abs() < 1e-12);
        assert!((report.macro_content.f - 1.8 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_lines_identity_scores_one() {
        let stops = StopSet::function_words();
        let lines = vec![toks("learn to cook pasta"), toks("wash the red pan")];
        let report = evaluate_lines(&lines, &lines, &stops, 1.0).unwrap();
        assert_eq!(report.macro_rouge.f, 1.0);
        assert_eq!(report.macro_content.f, 1.0);
    }

    #[test]
    fn evaluate_lines_mismatch() {
        let err = evaluate_lines(&[toks("a")], &[], &StopSet::function_words(), 1.0).unwrap_err();
        assert!(err.to_string().contains("line-count mismatch"));
    }

    #[test]
    fn macro_is_mean() {
        let stops = StopSet::default();
        let hyps = vec![toks("a b"), toks("a x")];
        let refs = vec![toks("a b"), toks("a b")];
        let report = evaluate_lines(&hyps, &refs, &stops, 1.0).unwrap();
        let f0 = report.per_example[0].rouge.f;
        let f1 = report.per_example[1].rouge.f;
        assert!((report.macro_rouge.f - (f0 + f1) / 2.0).abs() < 1e-12);
        assert!((f0 - 1.0).abs() < 1e-12);
        assert!((f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tsv_report_shape() {
        let stops = StopSet::default();
        let hyps = vec![toks("a b")];
        let report = evaluate_lines(&hyps, &hyps, &stops, 1.0).unwrap();
        let tsv = report.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 3); // header + 1 example + macro
        assert!(lines[0].starts_with("id\trouge_p"));
        assert!(lines[2].starts_with("macro\t"));
        assert!(lines[1].contains("1.000000"));
    }
}
