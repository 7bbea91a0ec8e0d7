//! Tf-idf document vectors backing the next-neighbor and extractive
//! baselines.

use crate::corpus::MultimodalExample;
use crate::{Error, Result};
use std::collections::HashMap;

/// Per-document tf-idf weight maps over a document collection, with an
/// idf table and precomputed norms. idf(w) = ln(N / df(w)).
#[derive(Debug, Clone)]
pub struct TfidfIndex {
    idf: HashMap<String, f64>,
    doc_vectors: Vec<HashMap<String, f64>>,
    doc_norms: Vec<f64>,
}

impl TfidfIndex {
    /// Index a collection of token documents.
    pub fn build(docs: &[Vec<String>]) -> Result<TfidfIndex> {
        if docs.is_empty() {
            return Err(Error::Baseline("cannot index an empty collection".into()));
        }
        let n = docs.len() as f64;
        let mut df: HashMap<&str, u64> = HashMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for w in seen {
                *df.entry(w).or_insert(0) += 1;
            }
        }
        let idf: HashMap<String, f64> = df
            .into_iter()
            .map(|(w, d)| (w.to_string(), (n / d as f64).ln()))
            .collect();
        let doc_vectors: Vec<HashMap<String, f64>> =
            docs.iter().map(|doc| weigh(doc, &idf)).collect();
        let doc_norms = doc_vectors.iter().map(norm).collect();
        Ok(TfidfIndex {
            idf,
            doc_vectors,
            doc_norms,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_vectors.is_empty()
    }

    /// Weight a query with this index's idf table. Words absent from the
    /// collection contribute nothing.
    pub fn query_vector(&self, tokens: &[String]) -> HashMap<String, f64> {
        weigh(tokens, &self.idf)
    }

    /// Index of the document most cosine-similar to the query; ties break
    /// toward the lowest document index.
    pub fn nearest(&self, tokens: &[String]) -> Result<(usize, f64)> {
        if self.doc_vectors.is_empty() {
            return Err(Error::Baseline("empty index".into()));
        }
        let q = self.query_vector(tokens);
        let qn = norm(&q);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, (dv, dn)) in self.doc_vectors.iter().zip(&self.doc_norms).enumerate() {
            let sim = cosine(&q, qn, dv, *dn);
            if sim > best.1 {
                best = (i, sim);
            }
        }
        Ok(best)
    }
}

fn weigh(tokens: &[String], idf: &HashMap<String, f64>) -> HashMap<String, f64> {
    let mut tf: HashMap<&str, f64> = HashMap::new();
    for t in tokens {
        *tf.entry(t).or_insert(0.0) += 1.0;
    }
    tf.into_iter()
        .filter_map(|(w, f)| idf.get(w).map(|i| (w.to_string(), f * i)))
        .collect()
}

fn norm(v: &HashMap<String, f64>) -> f64 {
    v.values().map(|w| w * w).sum::<f64>().sqrt()
}

fn cosine(a: &HashMap<String, f64>, an: f64, b: &HashMap<String, f64>, bn: f64) -> f64 {
    if an == 0.0 || bn == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(w, wa)| b.get(w).map(|wb| wa * wb))
        .sum();
    dot / (an * bn)
}

/// The training summary whose transcript is most tf-idf-similar to the
/// query transcript.
pub fn nearest_neighbor_summary(
    query_transcript: &[String],
    index: &TfidfIndex,
    train: &[MultimodalExample],
) -> Result<Vec<String>> {
    if index.len() != train.len() {
        return Err(Error::Baseline(
            "index size does not match the training split".into(),
        ));
    }
    let (best, _) = index.nearest(query_transcript)?;
    Ok(train[best].summary.clone())
}

/// Split a transcript into sentences at `.`/`!`/`?` tokens (boundary token
/// included in its sentence).
fn sentences(transcript: &[String]) -> Vec<&[String]> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, tok) in transcript.iter().enumerate() {
        if matches!(tok.as_str(), "." | "!" | "?") {
            out.push(&transcript[start..=i]);
            start = i + 1;
        }
    }
    if start < transcript.len() {
        out.push(&transcript[start..]);
    }
    out
}

/// The transcript sentence closest (tf-idf cosine) to the whole-transcript
/// vector; ties go to the earliest sentence. Sentence-level document
/// frequencies within this transcript define the idf table.
pub fn extract_sentence(transcript: &[String]) -> Result<Vec<String>> {
    if transcript.is_empty() {
        return Err(Error::Baseline("cannot extract from an empty transcript".into()));
    }
    let sents = sentences(transcript);
    if sents.len() == 1 {
        return Ok(sents[0].to_vec());
    }
    let docs: Vec<Vec<String>> = sents.iter().map(|s| s.to_vec()).collect();
    let index = TfidfIndex::build(&docs)?;
    let whole = index.query_vector(transcript);
    let whole_norm = norm(&whole);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, (dv, dn)) in index.doc_vectors.iter().zip(&index.doc_norms).enumerate() {
        let sim = cosine(&whole, whole_norm, dv, *dn);
        if sim > best.1 {
            best = (i, sim);
        }
    }
    Ok(sents[best.0].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toks;

    fn ex(id: &str, transcript: &str, summary: &str) -> MultimodalExample {
        MultimodalExample {
            id: id.into(),
            transcript: toks(transcript),
            summary: toks(summary),
            features: None,
        }
    }

    #[test]
    fn self_query_returns_own_summary() {
        let train = vec![
            ex("0", "cook the pasta with garlic", "learn to cook pasta"),
            ex("1", "wash the red car", "learn to wash a car"),
            ex("2", "tie the fishing knot", "learn to tie knots"),
        ];
        let docs: Vec<Vec<String>> = train.iter().map(|e| e.transcript.clone()).collect();
        let index = TfidfIndex::build(&docs).unwrap();
        for e in &train {
            let got = nearest_neighbor_summary(&e.transcript, &index, &train).unwrap();
            assert_eq!(got, e.summary);
        }
    }

    #[test]
    fn three_document_toy_matches_brute_force() {
        let docs = vec![
            toks("apple banana apple"),
            toks("banana cherry"),
            toks("cherry cherry date"),
        ];
        let index = TfidfIndex::build(&docs).unwrap();
        let query = toks("cherry date");
        // brute-force cosine over all documents, computed independently
        let n = docs.len() as f64;
        let mut df: HashMap<&str, f64> = HashMap::new();
        for d in &docs {
            let mut seen: Vec<&str> = d.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for w in seen {
                *df.entry(w).or_insert(0.0) += 1.0;
            }
        }
        let idf = |w: &str| (n / df[w]).ln();
        let vector = |d: &[String]| -> HashMap<String, f64> {
            let mut tf: HashMap<String, f64> = HashMap::new();
            for t in d {
                if df.contains_key(t.as_str()) {
                    *tf.entry(t.clone()).or_insert(0.0) += 1.0;
                }
            }
            tf.into_iter().map(|(w, f)| { let i = idf(&w); (w, f * i) }).collect()
        };
        let cos = |a: &HashMap<String, f64>, b: &HashMap<String, f64>| -> f64 {
            let dot: f64 = a.iter().filter_map(|(w, x)| b.get(w).map(|y| x * y)).sum();
            let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) }
        };
        let qv = vector(&query);
        let sims: Vec<f64> = docs.iter().map(|d| cos(&qv, &vector(d))).collect();
        let brute_best = sims
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        let (got, sim) = index.nearest(&query).unwrap();
        assert_eq!(got, brute_best);
        assert!((sim - sims[brute_best]).abs() < 1e-12);
        assert_eq!(got, 2);
    }

    #[test]
    fn disjoint_query_ties_to_lowest_id() {
        let train = vec![
            ex("0", "alpha beta", "first summary"),
            ex("1", "gamma delta", "second summary"),
        ];
        let docs: Vec<Vec<String>> = train.iter().map(|e| e.transcript.clone()).collect();
        let index = TfidfIndex::build(&docs).unwrap();
        let (best, sim) = index.nearest(&toks("zeta eta")).unwrap();
        assert_eq!(best, 0);
        assert_eq!(sim, 0.0);
        let summary = nearest_neighbor_summary(&toks("zeta eta"), &index, &train).unwrap();
        assert_eq!(summary, toks("first summary"));
    }

    #[test]
    fn duplicate_of_unselected_document_does_not_change_answer() {
        let mut train = vec![
            ex("0", "cook pasta garlic oil", "cook pasta"),
            ex("1", "wash car soap water", "wash car"),
        ];
        let docs: Vec<Vec<String>> = train.iter().map(|e| e.transcript.clone()).collect();
        let index = TfidfIndex::build(&docs).unwrap();
        let query = toks("pasta garlic");
        let before = nearest_neighbor_summary(&query, &index, &train).unwrap();

        train.push(ex("2", "wash car soap water", "wash car"));
        let docs: Vec<Vec<String>> = train.iter().map(|e| e.transcript.clone()).collect();
        let index = TfidfIndex::build(&docs).unwrap();
        let after = nearest_neighbor_summary(&query, &index, &train).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn single_sentence_extracts_itself() {
        let t = toks("mix the flour and water");
        assert_eq!(extract_sentence(&t).unwrap(), t);
    }

    #[test]
    fn dominant_terms_sentence_wins() {
        // middle sentence repeats the transcript's dominant content terms
        let t = toks(
            "hello everyone . today we cut peppers and cut onions with peppers . thanks for watching .",
        );
        let got = extract_sentence(&t).unwrap();
        assert_eq!(
            got,
            toks("today we cut peppers and cut onions with peppers .")
        );
    }

    #[test]
    fn identical_sentences_tie_to_first() {
        let t = toks("cut the peppers . cut the peppers .");
        let got = extract_sentence(&t).unwrap();
        assert_eq!(got, toks("cut the peppers ."));
        // and the output is a contiguous subsequence
        assert_eq!(&t[..4], got.as_slice());
    }

    #[test]
    fn trailing_tokens_without_boundary_form_a_sentence() {
        let t = toks("first part . second part without period");
        let sents = sentences(&t);
        assert_eq!(sents.len(), 2);
        assert_eq!(sents[1], &toks("second part without period")[..]);
    }
}
