//! Small synthetic corpora for demos and verification runs.
//!
//! Real How2-scale data is large; these generators produce desk-scale
//! corpora with known structure so that training behavior (overfitting,
//! generalization, multimodal advantage) can be checked quickly.

use crate::corpus::{toks, write_features, Corpus, MultimodalExample};
use crate::{Error, Result};
use std::path::{Path, PathBuf};

const VERBS: [&str; 8] = ["cut", "wash", "fry", "mix", "peel", "grill", "chop", "boil"];
const OBJECTS: [&str; 10] = [
    "peppers", "pans", "onions", "rice", "carrots", "noodles", "garlic", "beans", "corn",
    "mushrooms",
];
const TOOLS: [&str; 8] = [
    "knife", "sponge", "skillet", "whisk", "peeler", "tongs", "cleaver", "pot",
];

fn template_example(id: usize, verb: &str, object: &str, tool: &str) -> MultimodalExample {
    MultimodalExample {
        id: id.to_string(),
        transcript: toks(&format!(
            "hello friends . today we learn how to {verb} the {object} . \
             first you take your {object} and the {tool} . then you {verb} it gently . \
             practice makes perfect ."
        )),
        summary: toks(&format!(
            "learn how to {verb} the {object} with a {tool} from an expert ."
        )),
        features: None,
    }
}

/// Templated cooking-show corpus. Every verb and object appears in the
/// train split, but the test split holds out verb/object combinations
/// never seen together, so reproducing a test summary requires composing
/// seen pieces rather than recalling a training pair.
pub fn template_corpus() -> Corpus {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (vi, verb) in VERBS.iter().enumerate() {
        for (oi, object) in OBJECTS.iter().enumerate() {
            let tool = TOOLS[vi]; // tool is determined by the verb
            let held_out = (vi + oi) % 4 == 0;
            let bucket = if held_out { &mut test } else { &mut train };
            let id = bucket.len();
            bucket.push(template_example(id, verb, object, tool));
        }
    }
    Corpus {
        val: train.clone(),
        train,
        test,
        feature_dim: None,
    }
}

/// The first `n` templated pairs with train = val = test, for overfitting
/// checks.
pub fn overfit_corpus(n: usize) -> Corpus {
    let base = template_corpus();
    let all: Vec<MultimodalExample> = base
        .train
        .into_iter()
        .chain(base.test)
        .take(n)
        .enumerate()
        .map(|(i, mut ex)| {
            ex.id = i.to_string();
            ex
        })
        .collect();
    Corpus {
        train: all.clone(),
        val: all.clone(),
        test: all,
        feature_dim: None,
    }
}

/// Corpus where one summary token is determined solely by the sign of the
/// video features. Examples come in pairs sharing one transcript: the
/// positive-feature member summarizes to "... points up ." and the
/// negative one to "... points down .", so text alone cannot resolve the
/// direction token (position 3 of every summary).
pub fn sign_corpus(n_pairs: usize, d_v: usize, t_len: usize) -> Corpus {
    let mut train = Vec::new();
    for pair in 0..n_pairs {
        for (sign, word) in [(1.0f32, "up"), (-1.0f32, "down")] {
            let features: Vec<Vec<f32>> = (0..t_len)
                .map(|t| {
                    (0..d_v)
                        .map(|j| sign * (0.6 + 0.1 * t as f32 + 0.05 * j as f32))
                        .collect()
                })
                .collect();
            train.push(MultimodalExample {
                id: train.len().to_string(),
                transcript: toks(&format!("clip number n{pair} of the series .")),
                summary: toks(&format!("the arrow points {word} .")),
                features: Some(features),
            });
        }
    }
    Corpus {
        val: train.clone(),
        test: train.clone(),
        train,
        feature_dim: Some(d_v),
    }
}

/// Index of the direction token within `sign_corpus` summaries.
pub const SIGN_TOKEN_POSITION: usize = 3;

/// Write a corpus to disk in the manifest layout and return the manifest
/// path.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (name, examples) in [
        ("train", &corpus.train),
        ("val", &corpus.val),
        ("test", &corpus.test),
    ] {
        if examples.is_empty() {
            continue;
        }
        let transcripts: String = examples
            .iter()
            .map(|e| e.transcript.join(" ") + "\n")
            .collect();
        let summaries: String = examples
            .iter()
            .map(|e| e.summary.join(" ") + "\n")
            .collect();
        let t_path = dir.join(format!("{name}.transcripts.txt"));
        let s_path = dir.join(format!("{name}.summaries.txt"));
        std::fs::write(&t_path, transcripts).map_err(|e| Error::io(&t_path, e))?;
        std::fs::write(&s_path, summaries).map_err(|e| Error::io(&s_path, e))?;
        manifest.push_str(&format!("{name}.transcripts = {name}.transcripts.txt\n"));
        manifest.push_str(&format!("{name}.summaries = {name}.summaries.txt\n"));
        if examples.iter().any(|e| e.features.is_some()) {
            let fdir = dir.join(format!("{name}_features"));
            std::fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
            for (i, ex) in examples.iter().enumerate() {
                let feats = ex.features.as_ref().ok_or_else(|| {
                    Error::Corpus(format!("{name}: example {i} lacks features"))
                })?;
                write_features(fdir.join(format!("{i}.vfea")), feats)?;
            }
            manifest.push_str(&format!("{name}.features_dir = {name}_features\n"));
        }
    }
    let manifest_path = dir.join("manifest.txt");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
