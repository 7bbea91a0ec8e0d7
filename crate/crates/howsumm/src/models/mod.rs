//! The neural summarizers: four sequence-to-sequence variants assembled
//! from the numcore layers, plus training, decoding, and attention export.

mod attention;
mod decode;
mod forward;
mod train;

pub use attention::{export_attention, parse_attention, AttentionTrace, StepAttention, TraceStep};
pub use decode::{
    beam_decode, decode_split, decode_with_trace, greedy_decode, DecodeSession, DecodedSeq,
    StepDecoder, StepOutput,
};
pub use forward::{forward_teacher_forced, prepare, teacher_forced, ForwardPass, PreparedExample};
pub use train::{
    mean_loss, schedule_lr_trace, train, EpochLog, LrState, TrainLog, TrainSchedule,
};

use crate::corpus::Vocabulary;
use crate::numcore::{register_attention, register_fuse, register_gru, ParamStore};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which encoder stack feeds the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Bidirectional GRU over the transcript (the text-only model).
    TextOnly,
    /// Linear projection of feature vectors as attention memory, no
    /// recurrence.
    VideoProj,
    /// Bidirectional GRU over the feature vectors.
    VideoRnn,
    /// Both encoders with per-modality attention fused hierarchically.
    Hierarchical,
}

impl Variant {
    pub fn needs_text(self) -> bool {
        matches!(self, Variant::TextOnly | Variant::Hierarchical)
    }

    pub fn needs_video(self) -> bool {
        !matches!(self, Variant::TextOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::TextOnly => "text_only",
            Variant::VideoProj => "video_proj",
            Variant::VideoRnn => "video_rnn",
            Variant::Hierarchical => "hierarchical",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "text_only" => Ok(Variant::TextOnly),
            "video_proj" => Ok(Variant::VideoProj),
            "video_rnn" => Ok(Variant::VideoRnn),
            "hierarchical" => Ok(Variant::Hierarchical),
            other => Err(Error::Config(format!(
                "unknown variant '{other}' (expected text_only, video_proj, video_rnn, or hierarchical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub d_h: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub vocab_cap: usize,
    pub src_limit: usize,
    /// Video feature dimension; ignored by the text-only variant.
    pub d_v: usize,
    pub embed_dim: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::TextOnly,
            d_h: 256,
            enc_layers: 2,
            dec_layers: 2,
            vocab_cap: 20_000,
            src_limit: 600,
            d_v: 2048,
            embed_dim: 128,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_h", self.d_h),
            ("enc_layers", self.enc_layers),
            ("dec_layers", self.dec_layers),
            ("vocab_cap", self.vocab_cap),
            ("src_limit", self.src_limit),
            ("embed_dim", self.embed_dim),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Model(format!("{name} must be >= 1")));
            }
        }
        if self.variant.needs_video() && self.d_v == 0 {
            return Err(Error::Model("d_v must be >= 1 for video variants".into()));
        }
        Ok(())
    }

    /// Attention memory dimension: bidirectional states, or the projection
    /// target for the recurrence-free video model.
    pub fn memory_dim(&self) -> usize {
        2 * self.d_h
    }
}

/// Source and target vocabularies; equal unless the corpus was prepared
/// with separate vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabPair {
    pub src: Vocabulary,
    pub tgt: Vocabulary,
}

impl VocabPair {
    pub fn shared(v: Vocabulary) -> VocabPair {
        VocabPair {
            src: v.clone(),
            tgt: v,
        }
    }
}

/// A configured seq2seq variant: the parameter store plus the vocabularies
/// used to encode its inputs and outputs.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub vocabs: VocabPair,
}

/// Register all parameters for the configured variant. Initialization is
/// deterministic given the seed: parameters are registered in a fixed
/// order from one seeded generator.
pub fn build_model(config: &ModelConfig, vocabs: VocabPair) -> Result<Model> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = ParamStore::new();
    let d_h = config.d_h;
    let d_m = config.memory_dim();
    let emb = config.embed_dim;
    let v_src = vocabs.src.len();
    let v_tgt = vocabs.tgt.len();

    if config.variant.needs_text() {
        store.init_uniform("emb.src", &[v_src, emb], &mut rng)?;
        for l in 0..config.enc_layers {
            let d_in = if l == 0 { emb } else { d_m };
            register_gru(&mut store, &format!("enc.text.l{l}.fwd"), d_in, d_h, &mut rng)?;
            register_gru(&mut store, &format!("enc.text.l{l}.bwd"), d_in, d_h, &mut rng)?;
        }
    }
    match config.variant {
        Variant::VideoProj => {
            store.init_uniform("videoproj.w", &[d_m, config.d_v], &mut rng)?;
            store.init_zeros("videoproj.b", &[d_m])?;
        }
        Variant::VideoRnn | Variant::Hierarchical => {
            for l in 0..config.enc_layers {
                let d_in = if l == 0 { config.d_v } else { d_m };
                register_gru(&mut store, &format!("enc.video.l{l}.fwd"), d_in, d_h, &mut rng)?;
                register_gru(&mut store, &format!("enc.video.l{l}.bwd"), d_in, d_h, &mut rng)?;
            }
        }
        Variant::TextOnly => {}
    }

    store.init_uniform("emb.tgt", &[v_tgt, emb], &mut rng)?;
    store.init_uniform("dec.init.w", &[d_h, d_m], &mut rng)?;
    store.init_zeros("dec.init.b", &[d_h])?;

    // conditional GRU: input transition, attention read(s), context
    // transition
    register_gru(&mut store, "dec.gru_in", emb, d_h, &mut rng)?;
    match config.variant {
        Variant::TextOnly => {
            register_attention(&mut store, "dec.attn.text", d_h, d_m, d_h, &mut rng)?;
        }
        Variant::VideoProj | Variant::VideoRnn => {
            register_attention(&mut store, "dec.attn.video", d_h, d_m, d_h, &mut rng)?;
        }
        Variant::Hierarchical => {
            register_attention(&mut store, "dec.attn.text", d_h, d_m, d_h, &mut rng)?;
            register_attention(&mut store, "dec.attn.video", d_h, d_m, d_h, &mut rng)?;
            register_fuse(&mut store, "dec.fuse", d_h, d_m, d_h, 2, &mut rng)?;
        }
    }
    register_gru(&mut store, "dec.gru_ctx", d_m, d_h, &mut rng)?;
    for l in 1..config.dec_layers {
        register_gru(&mut store, &format!("dec.l{l}"), d_h, d_h, &mut rng)?;
    }
    store.init_uniform("out.w", &[v_tgt, d_h], &mut rng)?;
    store.init_zeros("out.b", &[v_tgt])?;

    Ok(Model {
        config: config.clone(),
        store,
        vocabs,
    })
}
