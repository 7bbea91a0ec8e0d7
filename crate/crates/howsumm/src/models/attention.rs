//! Attention traces and their TSV export.

use crate::{Error, Result};
use std::path::Path;

/// Attention read at one decoder step: one weight row per modality, plus
/// the modality mixing weights for the hierarchical variant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAttention {
    pub weights: Vec<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
}

/// One decoder step labeled by the token emitted (or, teacher-forced, the
/// gold token being predicted).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub token: String,
    pub attention: StepAttention,
}

/// Per-step attention rows over source positions for each modality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttentionTrace {
    /// modality labels, e.g. ["text"] or ["text", "video"]
    pub modalities: Vec<String>,
    pub steps: Vec<TraceStep>,
}

impl AttentionTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Render as TSV: a `token` column, per-modality weight columns
    /// `<modality>_<position>`, and `beta_<modality>` columns when modality
    /// mixing weights are present.
    pub fn to_tsv(&self) -> Result<String> {
        if self.steps.is_empty() {
            return Err(Error::Model("cannot export an empty attention trace".into()));
        }
        let first = &self.steps[0].attention;
        if first.weights.len() != self.modalities.len() {
            return Err(Error::Model(
                "trace weight rows do not match its modality labels".into(),
            ));
        }
        let mut header = vec!["token".to_string()];
        for (name, row) in self.modalities.iter().zip(&first.weights) {
            for i in 0..row.len() {
                header.push(format!("{name}_{i}"));
            }
        }
        if first.betas.is_some() {
            for name in &self.modalities {
                header.push(format!("beta_{name}"));
            }
        }
        let mut out = header.join("\t");
        out.push('\n');
        for step in &self.steps {
            let mut row = vec![step.token.clone()];
            for weights in &step.attention.weights {
                for w in weights {
                    row.push(format!("{w:.9}"));
                }
            }
            if let Some(betas) = &step.attention.betas {
                for b in betas {
                    row.push(format!("{b:.9}"));
                }
            }
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Write a trace as TSV (atomically).
pub fn export_attention(trace: &AttentionTrace, out_path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(out_path.as_ref(), trace.to_tsv()?.as_bytes())
}

/// Re-read an exported trace. Column prefixes reconstruct the modalities.
pub fn parse_attention(path: impl AsRef<Path>) -> Result<AttentionTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Model("attention file is empty".into()))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.first() != Some(&"token") {
        return Err(Error::Model("attention file header must start with 'token'".into()));
    }
    // group weight columns by prefix, in order of first appearance
    let mut modalities: Vec<String> = Vec::new();
    let mut widths: Vec<usize> = Vec::new();
    let mut n_betas = 0usize;
    for col in &cols[1..] {
        if let Some(name) = col.strip_prefix("beta_") {
            let _ = name;
            n_betas += 1;
            continue;
        }
        let (name, _idx) = col.rsplit_once('_').ok_or_else(|| {
            Error::Model(format!("malformed attention column '{col}'"))
        })?;
        match modalities.last() {
            Some(last) if last == name => *widths.last_mut().unwrap() += 1,
            _ => {
                modalities.push(name.to_string());
                widths.push(1);
            }
        }
    }
    let mut steps = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(Error::Model("attention row width does not match header".into()));
        }
        let token = fields[0].to_string();
        let mut pos = 1;
        let mut weights = Vec::with_capacity(widths.len());
        for &w in &widths {
            let row: std::result::Result<Vec<f64>, _> =
                fields[pos..pos + w].iter().map(|f| f.parse::<f64>()).collect();
            weights.push(row.map_err(|_| Error::Model("bad weight value".into()))?);
            pos += w;
        }
        let betas = if n_betas > 0 {
            let b: std::result::Result<Vec<f64>, _> =
                fields[pos..pos + n_betas].iter().map(|f| f.parse::<f64>()).collect();
            Some(b.map_err(|_| Error::Model("bad beta value".into()))?)
        } else {
            None
        };
        steps.push(TraceStep {
            token,
            attention: StepAttention { weights, betas },
        });
    }
    Ok(AttentionTrace { modalities, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_trace() -> AttentionTrace {
        AttentionTrace {
            modalities: vec!["text".into()],
            steps: vec![
                TraceStep {
                    token: "cut".into(),
                    attention: StepAttention {
                        weights: vec![vec![0.5, 0.25, 0.25]],
                        betas: None,
                    },
                },
                TraceStep {
                    token: "</s>".into(),
                    attention: StepAttention {
                        weights: vec![vec![0.1, 0.2, 0.7]],
                        betas: None,
                    },
                },
            ],
        }
    }

    #[test]
    fn tsv_shape_and_row_sums() {
        let tsv = toy_trace().to_tsv().unwrap();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "token\ttext_0\ttext_1\ttext_2");
        for line in &lines[1..] {
            let sum: f64 = line
                .split('\t')
                .skip(1)
                .map(|v| v.parse::<f64>().unwrap())
                .sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.tsv");
        let trace = toy_trace();
        export_attention(&trace, &path).unwrap();
        let back = parse_attention(&path).unwrap();
        assert_eq!(back.modalities, trace.modalities);
        assert_eq!(back.steps.len(), trace.steps.len());
        for (a, b) in back.steps.iter().zip(&trace.steps) {
            assert_eq!(a.token, b.token);
            for (ra, rb) in a.attention.weights.iter().zip(&b.attention.weights) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn hierarchical_trace_emits_beta_columns() {
        let trace = AttentionTrace {
            modalities: vec!["text".into(), "video".into()],
            steps: vec![TraceStep {
                token: "learn".into(),
                attention: StepAttention {
                    weights: vec![vec![0.6, 0.4], vec![0.3, 0.3, 0.4]],
                    betas: Some(vec![0.7, 0.3]),
                },
            }],
        };
        let tsv = trace.to_tsv().unwrap();
        let header = tsv.lines().next().unwrap();
        assert_eq!(
            header,
            "token\ttext_0\ttext_1\tvideo_0\tvideo_1\tvideo_2\tbeta_text\tbeta_video"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.tsv");
        export_attention(&trace, &path).unwrap();
        let back = parse_attention(&path).unwrap();
        assert_eq!(back.modalities, trace.modalities);
        let betas = back.steps[0].attention.betas.as_ref().unwrap();
        assert!((betas[0] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn empty_trace_rejected() {
        let trace = AttentionTrace::default();
        assert!(trace.to_tsv().is_err());
    }
}
