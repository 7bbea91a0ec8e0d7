//! Flat key=value run configuration.

use crate::models::Variant;
use crate::{Error, Result};
use std::path::{Path, PathBuf};

/// How transcripts enter the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    /// Full transcripts (subject to the token limit).
    Full,
    /// Replace every transcript by its extracted sentence, at train and
    /// test time alike.
    Extracted,
}

impl SourceMode {
    fn as_str(self) -> &'static str {
        match self {
            SourceMode::Full => "full",
            SourceMode::Extracted => "extracted",
        }
    }
}

/// Everything a pipeline run needs. Defaults follow the reference setup:
/// 256 hidden units, two encoder and decoder layers, a 20k vocabulary,
/// 600-token inputs, Adam at 4e-4 with halving on validation plateaus.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub variant: Variant,
    pub d_h: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub vocab_cap: usize,
    pub src_limit: usize,
    pub embed_dim: usize,
    pub separate_vocabs: bool,
    pub source_mode: SourceMode,
    pub lr: f64,
    pub halve_on_no_improve: bool,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub beam: usize,
    pub max_len: usize,
    pub beta: f64,
    pub stop_top_k: usize,
    pub stop_doc_frac: f64,
    pub corrupt_wer: f64,
    pub corrupt_mix: [f64; 3],
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: PathBuf::new(),
            variant: Variant::TextOnly,
            d_h: 256,
            enc_layers: 2,
            dec_layers: 2,
            vocab_cap: 20_000,
            src_limit: 600,
            embed_dim: 128,
            separate_vocabs: false,
            source_mode: SourceMode::Full,
            lr: 4e-4,
            halve_on_no_improve: true,
            max_epochs: 50,
            batch_size: 16,
            beam: 5,
            max_len: 50,
            beta: 1.0,
            stop_top_k: 25,
            stop_doc_frac: 0.4,
            corrupt_wer: 0.354,
            corrupt_mix: [0.6, 0.2, 0.2],
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("unparsable value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "unparsable value '{value}' for key '{key}' (expected true or false)"
        ))),
    }
}

impl RunConfig {
    /// Parse a config file. Unknown keys are rejected; absent keys take
    /// their defaults; `manifest` is required.
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        let mut manifest_seen = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "manifest" => {
                    config.manifest = base_dir.join(value);
                    manifest_seen = true;
                }
                "variant" => config.variant = Variant::parse(value)?,
                "d_h" => config.d_h = parse_value(key, value)?,
                "enc_layers" => config.enc_layers = parse_value(key, value)?,
                "dec_layers" => config.dec_layers = parse_value(key, value)?,
                "vocab_cap" => config.vocab_cap = parse_value(key, value)?,
                "src_limit" => config.src_limit = parse_value(key, value)?,
                "embed_dim" => config.embed_dim = parse_value(key, value)?,
                "separate_vocabs" => config.separate_vocabs = parse_bool(key, value)?,
                "source_mode" => {
                    config.source_mode = match value {
                        "full" => SourceMode::Full,
                        "extracted" => SourceMode::Extracted,
                        _ => {
                            return Err(Error::Config(format!(
                                "unparsable value '{value}' for key 'source_mode'"
                            )))
                        }
                    }
                }
                "lr" => config.lr = parse_value(key, value)?,
                "halve_on_no_improve" => config.halve_on_no_improve = parse_bool(key, value)?,
                "max_epochs" => config.max_epochs = parse_value(key, value)?,
                "batch_size" => config.batch_size = parse_value(key, value)?,
                "beam" => config.beam = parse_value(key, value)?,
                "max_len" => config.max_len = parse_value(key, value)?,
                "beta" => config.beta = parse_value(key, value)?,
                "stop_top_k" => config.stop_top_k = parse_value(key, value)?,
                "stop_doc_frac" => config.stop_doc_frac = parse_value(key, value)?,
                "corrupt_wer" => config.corrupt_wer = parse_value(key, value)?,
                "corrupt_sub" => config.corrupt_mix[0] = parse_value(key, value)?,
                "corrupt_del" => config.corrupt_mix[1] = parse_value(key, value)?,
                "corrupt_ins" => config.corrupt_mix[2] = parse_value(key, value)?,
                "seed" => config.seed = parse_value(key, value)?,
                "out_dir" => config.out_dir = base_dir.join(value),
                other => {
                    return Err(Error::Config(format!("unknown key '{other}'")));
                }
            }
        }
        if !manifest_seen {
            return Err(Error::Config("missing manifest (key 'manifest')".into()));
        }
        Ok(config)
    }

    /// Serialize back to the key=value format. `parse(serialize(c))`
    /// equals `c`.
    pub fn serialize(&self) -> String {
        let mix = self.corrupt_mix;
        format!(
            "manifest = {}\n\
             variant = {}\n\
             d_h = {}\n\
             enc_layers = {}\n\
             dec_layers = {}\n\
             vocab_cap = {}\n\
             src_limit = {}\n\
             embed_dim = {}\n\
             separate_vocabs = {}\n\
             source_mode = {}\n\
             lr = {}\n\
             halve_on_no_improve = {}\n\
             max_epochs = {}\n\
             batch_size = {}\n\
             beam = {}\n\
             max_len = {}\n\
             beta = {}\n\
             stop_top_k = {}\n\
             stop_doc_frac = {}\n\
             corrupt_wer = {}\n\
             corrupt_sub = {}\n\
             corrupt_del = {}\n\
             corrupt_ins = {}\n\
             seed = {}\n\
             out_dir = {}\n",
            self.manifest.display(),
            self.variant.as_str(),
            self.d_h,
            self.enc_layers,
            self.dec_layers,
            self.vocab_cap,
            self.src_limit,
            self.embed_dim,
            self.separate_vocabs,
            self.source_mode.as_str(),
            self.lr,
            self.halve_on_no_improve,
            self.max_epochs,
            self.batch_size,
            self.beam,
            self.max_len,
            self.beta,
            self.stop_top_k,
            self.stop_doc_frac,
            self.corrupt_wer,
            mix[0],
            mix[1],
            mix[2],
            self.seed,
            self.out_dir.display(),
        )
    }
}

/// Load a config file; relative paths inside it resolve against its
/// directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    RunConfig::parse(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse("manifest = m.txt\nvariant = hierarchical\n", Path::new("/d"))
            .unwrap();
        assert_eq!(c.manifest, PathBuf::from("/d/m.txt"));
        assert_eq!(c.variant, Variant::Hierarchical);
        assert_eq!(c.d_h, 256);
        assert_eq!(c.lr, 4e-4);
        assert_eq!(c.vocab_cap, 20_000);
        assert_eq!(c.src_limit, 600);
        assert_eq!(c.max_epochs, 50);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("manifest=m\nhiden_dim = 4\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("unknown key 'hiden_dim'"), "{err}");
    }

    #[test]
    fn unparsable_value_is_reported() {
        let err = RunConfig::parse("manifest=m\nd_h = soon\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("unparsable value 'soon' for key 'd_h'"));
    }

    #[test]
    fn missing_manifest_is_an_error() {
        let err = RunConfig::parse("d_h = 4\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("missing manifest"));
    }

    #[test]
    fn serialize_parse_round_trip() {
        let mut c = RunConfig::default();
        c.manifest = PathBuf::from("corpus/manifest.txt");
        c.variant = Variant::VideoRnn;
        c.d_h = 48;
        c.lr = 2.5e-3;
        c.stop_doc_frac = 0.35;
        c.seed = 1234;
        c.out_dir = PathBuf::from("runs/a");
        let text = c.serialize();
        let back = RunConfig::parse(&text, Path::new("")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let c = RunConfig::parse(
            "# a comment\n\nmanifest = m.txt\n  # indent\nseed = 9\n",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.seed, 9);
    }
}
