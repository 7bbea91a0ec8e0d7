//! Manifest parsing and corpus loading.
//!
//! A manifest is a plain-text key=value file with keys
//! `<split>.transcripts`, `<split>.summaries`, and optional
//! `<split>.features_dir` for the splits train/val/test. Transcript and
//! summary files hold one example per line with space-separated tokens, line
//! i aligned across the two files. Feature files live at
//! `<features_dir>/<id>.vfea` where the id is the zero-based line number.

use super::features::read_features;
use super::{Corpus, MultimodalExample};
use crate::{Error, Result};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

const SPLITS: [&str; 3] = ["train", "val", "test"];
const FIELDS: [&str; 3] = ["transcripts", "summaries", "features_dir"];

#[derive(Debug, Default)]
struct SplitSpec {
    transcripts: Option<PathBuf>,
    summaries: Option<PathBuf>,
    features_dir: Option<PathBuf>,
}

/// Load a corpus from a manifest file. Relative paths in the manifest are
/// resolved against the manifest's directory.
pub fn load_corpus(manifest_path: impl AsRef<Path>) -> Result<Corpus> {
    let manifest_path = manifest_path.as_ref();
    if !manifest_path.is_file() {
        return Err(Error::Corpus(format!(
            "manifest not found: {}",
            manifest_path.display()
        )));
    }
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(manifest_path, e))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut specs: HashMap<&str, SplitSpec> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Corpus(format!("manifest line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let (split, field) = key.split_once('.').ok_or_else(|| {
            Error::Corpus(format!("manifest: unknown key '{key}'"))
        })?;
        if !SPLITS.contains(&split) || !FIELDS.contains(&field) {
            return Err(Error::Corpus(format!("manifest: unknown key '{key}'")));
        }
        let path = base.join(value);
        let spec = specs.entry(SPLITS.iter().find(|s| **s == split).unwrap()).or_default();
        match field {
            "transcripts" => spec.transcripts = Some(path),
            "summaries" => spec.summaries = Some(path),
            _ => spec.features_dir = Some(path),
        }
    }

    let mut corpus = Corpus::default();
    let mut feature_dim: Option<usize> = None;
    for split in SPLITS {
        let Some(spec) = specs.get(split) else { continue };
        let examples = load_split(split, spec, &mut feature_dim)?;
        *corpus.split_mut(split)? = examples;
    }
    corpus.feature_dim = feature_dim;
    if corpus.train.is_empty() && corpus.val.is_empty() && corpus.test.is_empty() {
        return Err(Error::Corpus("manifest declares no splits".into()));
    }
    Ok(corpus)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

fn load_split(
    split: &str,
    spec: &SplitSpec,
    feature_dim: &mut Option<usize>,
) -> Result<Vec<MultimodalExample>> {
    let transcripts_path = spec.transcripts.as_ref().ok_or_else(|| {
        Error::Corpus(format!("manifest: {split}.transcripts missing"))
    })?;
    let summaries_path = spec.summaries.as_ref().ok_or_else(|| {
        Error::Corpus(format!("manifest: {split}.summaries missing"))
    })?;
    let transcripts = read_lines(transcripts_path)?;
    let summaries = read_lines(summaries_path)?;
    if transcripts.len() != summaries.len() {
        return Err(Error::Corpus(format!(
            "{split}: line-count mismatch ({} transcripts vs {} summaries)",
            transcripts.len(),
            summaries.len()
        )));
    }

    let mut examples = Vec::with_capacity(transcripts.len());
    for (i, (t_line, s_line)) in transcripts.iter().zip(&summaries).enumerate() {
        let transcript: Vec<String> = t_line.split_whitespace().map(str::to_string).collect();
        let summary: Vec<String> = s_line.split_whitespace().map(str::to_string).collect();
        if transcript.is_empty() {
            return Err(Error::Corpus(format!("{split}: empty transcript at line {}", i + 1)));
        }
        if summary.is_empty() {
            return Err(Error::Corpus(format!("{split}: empty summary at line {}", i + 1)));
        }
        let id = i.to_string();
        let features = match &spec.features_dir {
            None => None,
            Some(dir) => {
                let fpath = dir.join(format!("{id}.vfea"));
                if !fpath.is_file() {
                    return Err(Error::Corpus(format!(
                        "{split}: missing feature file for id {id}: {}",
                        fpath.display()
                    )));
                }
                let rows = read_features(&fpath)?;
                let d = rows[0].len();
                match *feature_dim {
                    None => *feature_dim = Some(d),
                    Some(expected) if expected != d => {
                        return Err(Error::Corpus(format!(
                            "{split}: feature-dimension mismatch for id {id} (D={d}, expected {expected})"
                        )));
                    }
                    _ => {}
                }
                Some(rows)
            }
        };
        examples.push(MultimodalExample { id, transcript, summary, features });
    }
    Ok(examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_features;
    use std::fs;

    fn write(path: &Path, content: &str) {
        fs::write(path, content).unwrap();
    }

    #[test]
    fn loads_toy_manifest() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("t.txt"), "cut the peppers .\nwash the pan .\n");
        write(&dir.path().join("s.txt"), "learn to cut\nlearn to wash\n");
        write(
            &dir.path().join("m.txt"),
            "train.transcripts = t.txt\ntrain.summaries = s.txt\n",
        );
        let corpus = load_corpus(dir.path().join("m.txt")).unwrap();
        assert_eq!(corpus.train.len(), 2);
        assert_eq!(corpus.train[0].id, "0");
        assert_eq!(corpus.train[1].transcript[0], "wash");
        assert!(corpus.feature_dim.is_none());
    }

    #[test]
    fn line_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("t.txt"), "a\nb\nc\n");
        write(&dir.path().join("s.txt"), "x\ny\n");
        write(
            &dir.path().join("m.txt"),
            "train.transcripts=t.txt\ntrain.summaries=s.txt\n",
        );
        let err = load_corpus(dir.path().join("m.txt")).unwrap_err();
        assert!(err.to_string().contains("line-count mismatch"));
    }

    #[test]
    fn feature_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("t.txt"), "a\nb\n");
        write(&dir.path().join("s.txt"), "x\ny\n");
        let fdir = dir.path().join("feats");
        fs::create_dir(&fdir).unwrap();
        write_features(fdir.join("0.vfea"), &[vec![0.0; 8]]).unwrap();
        write_features(fdir.join("1.vfea"), &[vec![0.0; 4]]).unwrap();
        write(
            &dir.path().join("m.txt"),
            "train.transcripts=t.txt\ntrain.summaries=s.txt\ntrain.features_dir=feats\n",
        );
        let err = load_corpus(dir.path().join("m.txt")).unwrap_err();
        assert!(err.to_string().contains("feature-dimension mismatch"));
    }

    #[test]
    fn missing_feature_file() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("t.txt"), "a\n");
        write(&dir.path().join("s.txt"), "x\n");
        fs::create_dir(dir.path().join("feats")).unwrap();
        write(
            &dir.path().join("m.txt"),
            "train.transcripts=t.txt\ntrain.summaries=s.txt\ntrain.features_dir=feats\n",
        );
        let err = load_corpus(dir.path().join("m.txt")).unwrap_err();
        assert!(err.to_string().contains("missing feature file"));
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("m.txt"), "train.transcript=typo.txt\n");
        let err = load_corpus(dir.path().join("m.txt")).unwrap_err();
        assert!(err.to_string().contains("unknown key 'train.transcript'"));
    }

    #[test]
    fn manifest_not_found() {
        let err = load_corpus("/nonexistent/manifest.txt").unwrap_err();
        assert!(err.to_string().contains("manifest not found"));
    }

    #[test]
    fn features_loaded_and_dim_recorded() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("t.txt"), "a b\n");
        write(&dir.path().join("s.txt"), "x y\n");
        let fdir = dir.path().join("feats");
        fs::create_dir(&fdir).unwrap();
        write_features(fdir.join("0.vfea"), &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        write(
            &dir.path().join("m.txt"),
            "train.transcripts=t.txt\ntrain.summaries=s.txt\ntrain.features_dir=feats\n",
        );
        let corpus = load_corpus(dir.path().join("m.txt")).unwrap();
        assert_eq!(corpus.feature_dim, Some(2));
        assert_eq!(
            corpus.train[0].features.as_ref().unwrap(),
            &vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
    }
}
