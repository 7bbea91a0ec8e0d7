//! Encoding and the teacher-forced forward pass.

use super::attention::{AttentionTrace, StepAttention, TraceStep};
use super::{Model, Variant};
use crate::corpus::{truncate, MultimodalExample, BOS_ID, EOS_ID};
use crate::numcore::{
    attend, gru_cell, hier_fuse, run_bigru, AttnParamIds, FuseParamIds, GruParamIds, NodeId, Tape,
};
use crate::{Error, Result};

/// An example encoded against a model's vocabularies, with the transcript
/// already truncated to the source limit.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub id: String,
    pub src_ids: Vec<u32>,
    pub tgt_ids: Vec<u32>,
    pub features: Option<Vec<Vec<f32>>>,
}

impl PreparedExample {
    /// Length of the attention memory this example will produce.
    pub fn memory_len(&self) -> usize {
        if self.src_ids.is_empty() {
            self.features.as_ref().map_or(0, Vec::len)
        } else {
            self.src_ids.len()
        }
    }
}

/// Validate an example against the model variant and encode it.
pub fn prepare(model: &Model, ex: &MultimodalExample) -> Result<PreparedExample> {
    let variant = model.config.variant;
    let src_ids = if variant.needs_text() {
        if ex.transcript.is_empty() {
            return Err(Error::Model(format!(
                "example {}: variant {} requires a transcript",
                ex.id,
                variant.as_str()
            )));
        }
        model
            .vocabs
            .src
            .encode(truncate(&ex.transcript, model.config.src_limit))
    } else {
        Vec::new()
    };
    let features = if variant.needs_video() {
        let feats = ex.features.as_ref().ok_or_else(|| {
            Error::Model(format!(
                "example {}: variant {} requires video features",
                ex.id,
                variant.as_str()
            ))
        })?;
        for row in feats {
            if row.len() != model.config.d_v {
                return Err(Error::Model(format!(
                    "example {}: feature dimension {} does not match configured d_v {}",
                    ex.id,
                    row.len(),
                    model.config.d_v
                )));
            }
        }
        Some(feats.clone())
    } else {
        None
    };
    if ex.summary.is_empty() {
        return Err(Error::Model(format!("example {}: empty summary", ex.id)));
    }
    Ok(PreparedExample {
        id: ex.id.clone(),
        src_ids,
        tgt_ids: model.vocabs.tgt.encode(&ex.summary),
        features,
    })
}

/// Per-modality attention memories on the tape.
pub(crate) struct Memories {
    pub text: Option<Vec<NodeId>>,
    pub video: Option<Vec<NodeId>>,
}

impl Memories {
    fn all_nodes(&self) -> Vec<NodeId> {
        self.text
            .iter()
            .chain(self.video.iter())
            .flatten()
            .copied()
            .collect()
    }
}

pub(crate) fn modality_labels(variant: Variant) -> Vec<String> {
    match variant {
        Variant::TextOnly => vec!["text".into()],
        Variant::VideoProj | Variant::VideoRnn => vec!["video".into()],
        Variant::Hierarchical => vec!["text".into(), "video".into()],
    }
}

/// Run the variant's encoder(s) over a prepared example.
pub(crate) fn encode_memories(
    tape: &mut Tape,
    model: &Model,
    ex: &PreparedExample,
) -> Result<Memories> {
    let config = &model.config;
    let mut text = None;
    let mut video = None;
    if config.variant.needs_text() {
        let emb_src = tape.param("emb.src")?;
        let inputs: Vec<NodeId> = ex
            .src_ids
            .iter()
            .map(|&id| tape.gather_row(emb_src, id as usize))
            .collect::<Result<_>>()?;
        text = Some(run_bigru(tape, &inputs, "enc.text", config.enc_layers)?);
    }
    match config.variant {
        Variant::VideoProj => {
            let w = tape.param("videoproj.w")?;
            let b = tape.param("videoproj.b")?;
            let feats = ex.features.as_ref().expect("validated by prepare");
            let mut mem = Vec::with_capacity(feats.len());
            for f in feats {
                let x: Vec<f64> = f.iter().map(|&v| v as f64).collect();
                let xn = tape.input(&x);
                let proj = tape.matvec(w, xn)?;
                mem.push(tape.add(proj, b)?);
            }
            video = Some(mem);
        }
        Variant::VideoRnn | Variant::Hierarchical => {
            let feats = ex.features.as_ref().expect("validated by prepare");
            let inputs: Vec<NodeId> = feats
                .iter()
                .map(|f| {
                    let x: Vec<f64> = f.iter().map(|&v| v as f64).collect();
                    tape.input(&x)
                })
                .collect();
            video = Some(run_bigru(tape, &inputs, "enc.video", config.enc_layers)?);
        }
        Variant::TextOnly => {}
    }
    Ok(Memories { text, video })
}

/// Tape node ids for the whole decoder stack.
pub(crate) struct DecoderParams {
    variant: Variant,
    d_h: usize,
    emb_tgt: NodeId,
    init_w: NodeId,
    init_b: NodeId,
    gru_in: GruParamIds,
    attn_text: Option<AttnParamIds>,
    attn_video: Option<AttnParamIds>,
    fuse: Option<FuseParamIds>,
    gru_ctx: GruParamIds,
    upper: Vec<GruParamIds>,
    out_w: NodeId,
    out_b: NodeId,
}

impl DecoderParams {
    pub fn from_store(tape: &mut Tape, model: &Model) -> Result<DecoderParams> {
        let variant = model.config.variant;
        let (attn_text, attn_video, fuse) = match variant {
            Variant::TextOnly => (Some(AttnParamIds::from_store(tape, "dec.attn.text")?), None, None),
            Variant::VideoProj | Variant::VideoRnn => {
                (None, Some(AttnParamIds::from_store(tape, "dec.attn.video")?), None)
            }
            Variant::Hierarchical => (
                Some(AttnParamIds::from_store(tape, "dec.attn.text")?),
                Some(AttnParamIds::from_store(tape, "dec.attn.video")?),
                Some(FuseParamIds::from_store(tape, "dec.fuse", 2)?),
            ),
        };
        let mut upper = Vec::new();
        for l in 1..model.config.dec_layers {
            upper.push(GruParamIds::from_store(tape, &format!("dec.l{l}"))?);
        }
        Ok(DecoderParams {
            variant,
            d_h: model.config.d_h,
            emb_tgt: tape.param("emb.tgt")?,
            init_w: tape.param("dec.init.w")?,
            init_b: tape.param("dec.init.b")?,
            gru_in: GruParamIds::from_store(tape, "dec.gru_in")?,
            attn_text,
            attn_video,
            fuse,
            gru_ctx: GruParamIds::from_store(tape, "dec.gru_ctx")?,
            upper,
            out_w: tape.param("out.w")?,
            out_b: tape.param("out.b")?,
        })
    }

    /// Layer states before the first step: a tanh-projected mean of all
    /// encoder states for the bottom layer, zeros above.
    pub fn initial_states(&self, tape: &mut Tape, memories: &Memories) -> Result<Vec<NodeId>> {
        let all = memories.all_nodes();
        if all.is_empty() {
            return Err(Error::Model("encoder produced no states".into()));
        }
        let sum = tape.sum_nodes(&all)?;
        let mean = tape.scale(sum, 1.0 / all.len() as f64)?;
        let proj = tape.matvec(self.init_w, mean)?;
        let proj = tape.add(proj, self.init_b)?;
        let s0 = tape.tanh(proj)?;
        let mut states = vec![s0];
        if !self.upper.is_empty() {
            let zeros = tape.input(&vec![0.0; self.d_h]);
            states.extend(std::iter::repeat(zeros).take(self.upper.len()));
        }
        Ok(states)
    }

    /// One decoder step: embed the previous token, run the conditional GRU
    /// (with hierarchical fusion when both modalities are present), stack
    /// the upper layers, and project to vocabulary logits.
    pub fn step(
        &self,
        tape: &mut Tape,
        memories: &Memories,
        prev_states: &[NodeId],
        prev_token: u32,
    ) -> Result<(Vec<NodeId>, NodeId, StepAttention)> {
        let y_emb = tape.gather_row(self.emb_tgt, prev_token as usize)?;
        let s_mid = gru_cell(tape, y_emb, prev_states[0], &self.gru_in)?;
        let (context, attention) = match self.variant {
            Variant::Hierarchical => {
                let text_mem = memories.text.as_ref().expect("hierarchical needs text");
                let video_mem = memories.video.as_ref().expect("hierarchical needs video");
                let (wt, ct) = attend(tape, s_mid, text_mem, self.attn_text.as_ref().unwrap())?;
                let (wv, cv) = attend(tape, s_mid, video_mem, self.attn_video.as_ref().unwrap())?;
                let (fused, betas) =
                    hier_fuse(tape, s_mid, &[ct, cv], self.fuse.as_ref().unwrap())?;
                let attention = StepAttention {
                    weights: vec![tape.value(wt).to_vec(), tape.value(wv).to_vec()],
                    betas: Some(tape.value(betas).to_vec()),
                };
                (fused, attention)
            }
            _ => {
                let (memory, params) = if self.variant == Variant::TextOnly {
                    (memories.text.as_ref().unwrap(), self.attn_text.as_ref().unwrap())
                } else {
                    (memories.video.as_ref().unwrap(), self.attn_video.as_ref().unwrap())
                };
                let (w, c) = attend(tape, s_mid, memory, params)?;
                let attention = StepAttention {
                    weights: vec![tape.value(w).to_vec()],
                    betas: None,
                };
                (c, attention)
            }
        };
        let bottom = gru_cell(tape, context, s_mid, &self.gru_ctx)?;
        let mut states = vec![bottom];
        let mut below = bottom;
        for (k, params) in self.upper.iter().enumerate() {
            let s = gru_cell(tape, below, prev_states[k + 1], params)?;
            states.push(s);
            below = s;
        }
        let logits = tape.matvec(self.out_w, below)?;
        let logits = tape.add(logits, self.out_b)?;
        Ok((states, logits, attention))
    }
}

/// A teacher-forced pass: the tape, the summed token loss node, and the
/// per-step attention trace labeled with the gold tokens.
pub struct ForwardPass<'m> {
    pub tape: Tape<'m>,
    pub sum_loss: NodeId,
    pub n_positions: usize,
    pub mean_loss: f64,
    pub trace: AttentionTrace,
}

/// Run teacher forcing over a prepared example. The loss covers every
/// summary token plus the terminating EOS.
pub fn teacher_forced<'m>(model: &'m Model, ex: &PreparedExample) -> Result<ForwardPass<'m>> {
    let mut tape = Tape::new(&model.store);
    let memories = encode_memories(&mut tape, model, ex)?;
    let dp = DecoderParams::from_store(&mut tape, model)?;
    let mut states = dp.initial_states(&mut tape, &memories)?;

    let inputs: Vec<u32> = std::iter::once(BOS_ID)
        .chain(ex.tgt_ids.iter().copied())
        .collect();
    let targets: Vec<u32> = ex
        .tgt_ids
        .iter()
        .copied()
        .chain(std::iter::once(EOS_ID))
        .collect();

    let mut losses = Vec::with_capacity(targets.len());
    let mut steps = Vec::with_capacity(targets.len());
    for (prev, target) in inputs.iter().zip(&targets) {
        let (new_states, logits, attention) = dp.step(&mut tape, &memories, &states, *prev)?;
        losses.push(tape.cross_entropy(logits, *target as usize)?);
        steps.push(TraceStep {
            token: model.vocabs.tgt.word(*target)?.to_string(),
            attention,
        });
        states = new_states;
    }
    let sum_loss = tape.sum_nodes(&losses)?;
    let n_positions = targets.len();
    let mean_loss = tape.value(sum_loss)[0] / n_positions as f64;
    Ok(ForwardPass {
        tape,
        sum_loss,
        n_positions,
        mean_loss,
        trace: AttentionTrace {
            modalities: modality_labels(model.config.variant),
            steps,
        },
    })
}

/// Mean token loss and attention trace for one raw example.
pub fn forward_teacher_forced(
    model: &Model,
    ex: &MultimodalExample,
) -> Result<(f64, AttentionTrace)> {
    let prepared = prepare(model, ex)?;
    let fwd = teacher_forced(model, &prepared)?;
    Ok((fwd.mean_loss, fwd.trace))
}
