//! The `howsumm` command-line pipeline: prepare, train, decode, baseline,
//! evaluate, corrupt, attention.

mod config;

pub use config::{load_config, RunConfig, SourceMode};

use crate::baselines::{
    extract_sentence, nearest_neighbor_summary, sample_lm, train_ngram_lm, TfidfIndex, LM_MAX_LEN,
    LM_ORDER, LM_SMOOTHING,
};
use crate::corpus::{
    build_vocab, corrupt_to_wer, load_corpus, top_frequent_words, Corpus, CorruptionSpec,
    VocabScope, Vocabulary,
};
use crate::eval::{derive_stopwords, evaluate_corpus, StopSet};
use crate::models::{
    build_model, decode_split, decode_with_trace, export_attention, train, Model, ModelConfig,
    TrainSchedule, VocabPair,
};
use crate::numcore::ParamStore;
use crate::{write_atomic, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "howsumm",
    version,
    about = "Multimodal abstractive summarization pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary and report corpus statistics
    Prepare(CommonArgs),
    /// Train the configured model variant
    Train(CommonArgs),
    /// Decode a split with a trained model
    Decode(DecodeArgs),
    /// Run a non-neural baseline over a split
    Baseline(BaselineArgs),
    /// Score a hypothesis file against a reference file
    Evaluate(EvaluateArgs),
    /// Write a WER-corrupted copy of a split's transcripts
    Corrupt(CorruptArgs),
    /// Export the attention matrix of one decoded example
    Attention(AttentionArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (key=value)
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        Ok(config)
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which split to decode
    #[arg(long, default_value = "test")]
    split: String,
    /// Checkpoint to load (default: <out>/model.ckpt)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Replace the split's transcripts with this file (e.g. corrupted ones)
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    /// Sample the add-k n-gram language model
    RandomLm,
    /// Centroid-closest sentence of each transcript
    Extractive,
    /// Summary of the tf-idf nearest training transcript
    Neighbor,
}

#[derive(Args)]
struct BaselineArgs {
    /// Which baseline to run
    #[arg(value_enum)]
    kind: BaselineKind,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Hypothesis file, one tokenized summary per line
    #[arg(long)]
    hyp: PathBuf,
    /// Reference file, line-aligned with the hypotheses
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Config for task-specific stop words (function words only if absent)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write report.tsv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorruptArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "test")]
    split: String,
    /// Target word error rate (default from config)
    #[arg(long)]
    wer: Option<f64>,
}

#[derive(Args)]
struct AttentionArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "test")]
    split: String,
    /// Example id (zero-based line index within the split)
    #[arg(long, default_value = "0")]
    example: String,
    /// Checkpoint to load (default: <out>/model.ckpt)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

/// Run the CLI; returns the process exit code. Declared outputs are
/// written via temp-file-and-rename so failed runs never leave partial
/// files behind.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return 1;
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Honor HOWSUMM_THREADS as a cap on rayon workers.
fn init_thread_pool() -> Result<()> {
    let Ok(value) = std::env::var("HOWSUMM_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().map_err(|_| {
        Error::Config(format!("HOWSUMM_THREADS must be a positive integer, got '{value}'"))
    })?;
    if n == 0 {
        return Err(Error::Config("HOWSUMM_THREADS must be >= 1".into()));
    }
    // a second initialization in one process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Prepare(args) => prepare_cmd(&args.load()?),
        Command::Train(args) => train_cmd(&args.load()?),
        Command::Decode(args) => decode_cmd(&args),
        Command::Baseline(args) => baseline_cmd(&args),
        Command::Evaluate(args) => evaluate_cmd(&args),
        Command::Corrupt(args) => corrupt_cmd(&args),
        Command::Attention(args) => attention_cmd(&args),
    }
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))
}

/// Load the corpus and apply the configured source transform.
fn corpus_for(config: &RunConfig) -> Result<Corpus> {
    let mut corpus = load_corpus(&config.manifest)?;
    if config.source_mode == SourceMode::Extracted {
        for split in ["train", "val", "test"] {
            for ex in corpus.split_mut(split)?.iter_mut() {
                ex.transcript = extract_sentence(&ex.transcript)?;
            }
        }
    }
    Ok(corpus)
}

fn vocabs_for(config: &RunConfig, corpus: &Corpus) -> Result<VocabPair> {
    if corpus.train.is_empty() {
        return Err(Error::Corpus("empty corpus".into()));
    }
    if config.separate_vocabs {
        Ok(VocabPair {
            src: build_vocab(&corpus.train, config.vocab_cap, VocabScope::Transcripts)?,
            tgt: build_vocab(&corpus.train, config.vocab_cap, VocabScope::Summaries)?,
        })
    } else {
        Ok(VocabPair::shared(build_vocab(
            &corpus.train,
            config.vocab_cap,
            VocabScope::Joint,
        )?))
    }
}

fn model_config_for(config: &RunConfig, corpus: &Corpus) -> ModelConfig {
    ModelConfig {
        variant: config.variant,
        d_h: config.d_h,
        enc_layers: config.enc_layers,
        dec_layers: config.dec_layers,
        vocab_cap: config.vocab_cap,
        src_limit: config.src_limit,
        d_v: corpus.feature_dim.unwrap_or(1),
        embed_dim: config.embed_dim,
        seed: config.seed,
    }
}

fn build_configured_model(config: &RunConfig, corpus: &Corpus) -> Result<Model> {
    let vocabs = vocabs_for(config, corpus)?;
    build_model(&model_config_for(config, corpus), vocabs)
}

fn load_checkpoint_into(model: &mut Model, path: &Path) -> Result<()> {
    let loaded = ParamStore::load(path)?;
    if loaded.names() != model.store.names() {
        return Err(Error::Model(format!(
            "checkpoint {} does not match the configured model",
            path.display()
        )));
    }
    for i in 0..loaded.len() {
        if loaded.at(i).shape() != model.store.at(i).shape() {
            return Err(Error::Model(format!(
                "checkpoint {} has mismatched shape for '{}'",
                path.display(),
                loaded.name_at(i)
            )));
        }
    }
    model.store = loaded;
    Ok(())
}

fn write_lines(path: &Path, lines: &[Vec<String>]) -> Result<()> {
    let text: String = lines.iter().map(|l| l.join(" ") + "\n").collect();
    write_atomic(path, text.as_bytes())
}

fn prepare_cmd(config: &RunConfig) -> Result<()> {
    let corpus = corpus_for(config)?;
    ensure_out_dir(config)?;
    let vocab = build_vocab(&corpus.train, config.vocab_cap, VocabScope::Joint)?;
    let vocab_text: String = vocab.words().iter().map(|w| w.clone() + "\n").collect();
    write_atomic(&config.out_dir.join("vocab.txt"), vocab_text.as_bytes())?;

    let mut stats = String::from("key\tvalue\n");
    for name in ["train", "val", "test"] {
        let split = corpus.split(name)?;
        stats.push_str(&format!("{name}_examples\t{}\n", split.len()));
        if !split.is_empty() {
            let mean = |f: &dyn Fn(&crate::corpus::MultimodalExample) -> usize| -> f64 {
                split.iter().map(|e| f(e) as f64).sum::<f64>() / split.len() as f64
            };
            stats.push_str(&format!(
                "{name}_mean_transcript_len\t{:.2}\n",
                mean(&|e| e.transcript.len())
            ));
            stats.push_str(&format!(
                "{name}_mean_summary_len\t{:.2}\n",
                mean(&|e| e.summary.len())
            ));
        }
    }
    if let Some(d) = corpus.feature_dim {
        stats.push_str(&format!("feature_dim\t{d}\n"));
    }
    stats.push_str(&format!("vocab_size\t{}\n", vocab.len()));
    let transcripts: Vec<Vec<String>> =
        corpus.train.iter().map(|e| e.transcript.clone()).collect();
    let summaries: Vec<Vec<String>> = corpus.train.iter().map(|e| e.summary.clone()).collect();
    stats.push_str(&format!(
        "top_transcript_words\t{}\n",
        top_frequent_words(&transcripts, 18).join(" ")
    ));
    stats.push_str(&format!(
        "top_summary_words\t{}\n",
        top_frequent_words(&summaries, 18).join(" ")
    ));
    write_atomic(&config.out_dir.join("stats.tsv"), stats.as_bytes())?;
    println!(
        "prepared: vocab {} entries, train {} examples -> {}",
        vocab.len(),
        corpus.train.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn train_cmd(config: &RunConfig) -> Result<()> {
    let corpus = corpus_for(config)?;
    ensure_out_dir(config)?;
    let mut model = build_configured_model(config, &corpus)?;
    let schedule = TrainSchedule {
        lr: config.lr,
        halve_on_no_improve: config.halve_on_no_improve,
        max_epochs: config.max_epochs,
        batch_size: config.batch_size,
        seed: config.seed,
    };
    let log = train(&mut model, &corpus, &schedule)?;
    write_atomic(
        &config.out_dir.join("train_log.tsv"),
        log.to_tsv().as_bytes(),
    )?;
    model.store.save(config.out_dir.join("model.ckpt"))?;
    let last = log.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs; final val loss {:.4}; best val loss {:.4} at epoch {}",
        log.epochs.len(),
        last.val_loss,
        log.best_val_loss,
        log.best_epoch
    );
    Ok(())
}

fn read_token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

fn decode_cmd(args: &DecodeArgs) -> Result<()> {
    let config = args.common.load()?;
    let mut corpus = corpus_for(&config)?;
    if let Some(path) = &args.transcripts {
        let lines = read_token_lines(path)?;
        let split = corpus.split_mut(&args.split)?;
        if lines.len() != split.len() {
            return Err(Error::Corpus(format!(
                "line-count mismatch: {} replacement transcripts for {} examples",
                lines.len(),
                split.len()
            )));
        }
        for (ex, line) in split.iter_mut().zip(lines) {
            ex.transcript = line;
        }
    }
    ensure_out_dir(&config)?;
    let mut model = build_configured_model(&config, &corpus)?;
    let checkpoint = args
        .checkpoint
        .clone()
        .unwrap_or_else(|| config.out_dir.join("model.ckpt"));
    load_checkpoint_into(&mut model, &checkpoint)?;
    let examples = corpus.split(&args.split)?;
    let hyps = decode_split(&model, examples, config.beam, config.max_len)?;
    write_lines(&config.out_dir.join("hyps.txt"), &hyps)?;
    let refs: Vec<Vec<String>> = examples.iter().map(|e| e.summary.clone()).collect();
    write_lines(&config.out_dir.join("refs.txt"), &refs)?;
    println!(
        "decoded {} examples from {} -> {}",
        hyps.len(),
        args.split,
        config.out_dir.join("hyps.txt").display()
    );
    Ok(())
}

fn baseline_cmd(args: &BaselineArgs) -> Result<()> {
    let config = args.common.load()?;
    let corpus = corpus_for(&config)?;
    ensure_out_dir(&config)?;
    let examples = corpus.split(&args.split)?;
    let hyps: Vec<Vec<String>> = match args.kind {
        BaselineKind::RandomLm => {
            let summaries: Vec<Vec<String>> =
                corpus.train.iter().map(|e| e.summary.clone()).collect();
            let lm = train_ngram_lm(&summaries, LM_ORDER, LM_SMOOTHING)?;
            examples
                .iter()
                .enumerate()
                .map(|(i, _)| sample_lm(&lm, config.seed.wrapping_add(i as u64), LM_MAX_LEN))
                .collect::<Result<_>>()?
        }
        BaselineKind::Extractive => examples
            .iter()
            .map(|e| extract_sentence(&e.transcript))
            .collect::<Result<_>>()?,
        BaselineKind::Neighbor => {
            let docs: Vec<Vec<String>> =
                corpus.train.iter().map(|e| e.transcript.clone()).collect();
            let index = TfidfIndex::build(&docs)?;
            examples
                .iter()
                .map(|e| nearest_neighbor_summary(&e.transcript, &index, &corpus.train))
                .collect::<Result<_>>()?
        }
    };
    write_lines(&config.out_dir.join("hyps.txt"), &hyps)?;
    let refs: Vec<Vec<String>> = examples.iter().map(|e| e.summary.clone()).collect();
    write_lines(&config.out_dir.join("refs.txt"), &refs)?;
    println!(
        "baseline wrote {} hypotheses -> {}",
        hyps.len(),
        config.out_dir.join("hyps.txt").display()
    );
    Ok(())
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let (stops, beta, out_dir) = match &args.config {
        Some(path) => {
            let config = load_config(path)?;
            let corpus = load_corpus(&config.manifest)?;
            let summaries: Vec<Vec<String>> =
                corpus.train.iter().map(|e| e.summary.clone()).collect();
            let stops = derive_stopwords(&summaries, config.stop_top_k, config.stop_doc_frac);
            (stops, config.beta, config.out_dir)
        }
        None => (StopSet::function_words(), 1.0, PathBuf::from("out")),
    };
    let out_dir = args.out.clone().unwrap_or(out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let report = evaluate_corpus(&args.hyp, &args.reference, &stops, beta)?;
    write_atomic(&out_dir.join("report.tsv"), report.to_tsv().as_bytes())?;
    println!(
        "examples\t{}\nmacro_rouge_l_f\t{:.6}\nmacro_content_f1\t{:.6}",
        report.per_example.len(),
        report.macro_rouge.f,
        report.macro_content.f
    );
    Ok(())
}

fn corrupt_cmd(args: &CorruptArgs) -> Result<()> {
    let config = args.common.load()?;
    let corpus = corpus_for(&config)?;
    ensure_out_dir(&config)?;
    let vocab: Vocabulary = build_vocab(&corpus.train, config.vocab_cap, VocabScope::Joint)?;
    let examples = corpus.split(&args.split)?;
    let wer = args.wer.unwrap_or(config.corrupt_wer);
    let mut lines = Vec::with_capacity(examples.len());
    for (i, ex) in examples.iter().enumerate() {
        let spec = CorruptionSpec {
            target_wer: wer,
            sub_del_ins_mix: config.corrupt_mix,
            seed: config.seed.wrapping_add(i as u64),
        };
        lines.push(corrupt_to_wer(&ex.transcript, &spec, &vocab)?);
    }
    let out = config
        .out_dir
        .join(format!("{}.transcripts.corrupted.txt", args.split));
    write_lines(&out, &lines)?;
    println!("corrupted {} transcripts at WER {wer} -> {}", lines.len(), out.display());
    Ok(())
}

fn attention_cmd(args: &AttentionArgs) -> Result<()> {
    let config = args.common.load()?;
    let corpus = corpus_for(&config)?;
    ensure_out_dir(&config)?;
    let mut model = build_configured_model(&config, &corpus)?;
    let checkpoint = args
        .checkpoint
        .clone()
        .unwrap_or_else(|| config.out_dir.join("model.ckpt"));
    load_checkpoint_into(&mut model, &checkpoint)?;
    let examples = corpus.split(&args.split)?;
    let ex = examples
        .iter()
        .find(|e| e.id == args.example)
        .ok_or_else(|| {
            Error::Corpus(format!(
                "no example with id '{}' in split '{}'",
                args.example, args.split
            ))
        })?;
    let (tokens, trace) = decode_with_trace(&model, ex, config.max_len)?;
    let out = config.out_dir.join("attention.tsv");
    export_attention(&trace, &out)?;
    println!("decoded: {}\nattention -> {}", tokens.join(" "), out.display());
    Ok(())
}
