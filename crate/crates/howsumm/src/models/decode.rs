//! Greedy and length-normalized beam decoding.
//!
//! Both decoders work against the `StepDecoder` trait so the search logic
//! can be tested on hand-built probability tables independently of any
//! trained model.

use super::attention::{AttentionTrace, StepAttention, TraceStep};
use super::forward::{encode_memories, modality_labels, DecoderParams, Memories, PreparedExample};
use super::{prepare, Model};
use crate::corpus::{MultimodalExample, BOS_ID, EOS_ID, PAD_ID};
use crate::numcore::{NodeId, Tape};
use crate::{Error, Result};
use rayon::prelude::*;

/// One decoding step: the successor state, log-probabilities over the
/// target vocabulary, and the attention read behind them.
pub struct StepOutput<S> {
    pub state: S,
    pub log_probs: Vec<f64>,
    pub attention: StepAttention,
}

/// Anything that can be stepped token by token.
pub trait StepDecoder {
    type State: Clone;
    fn initial_state(&mut self) -> Result<Self::State>;
    /// Consume `prev_token` (BOS on the first call) and return the
    /// distribution for the next position.
    fn step(&mut self, state: &Self::State, prev_token: u32) -> Result<StepOutput<Self::State>>;
    fn vocab_size(&self) -> usize;
}

/// A decoded sequence: emitted ids (including the terminating EOS when one
/// was produced) and the per-step attention.
#[derive(Debug, Clone)]
pub struct DecodedSeq {
    pub ids: Vec<u32>,
    pub attention: Vec<StepAttention>,
}

fn pick_argmax(log_probs: &[f64]) -> Result<u32> {
    let mut best: Option<(usize, f64)> = None;
    for (i, lp) in log_probs.iter().enumerate() {
        if i as u32 == PAD_ID || i as u32 == BOS_ID {
            continue;
        }
        if best.map_or(true, |(_, b)| *lp > b) {
            best = Some((i, *lp));
        }
    }
    best.map(|(i, _)| i as u32)
        .ok_or_else(|| Error::Model("no candidate tokens to decode".into()))
}

/// Argmax decoding: ties break toward the lowest token id; PAD and BOS are
/// never emitted; stops at EOS or after `max_len` emissions.
pub fn greedy_decode<D: StepDecoder>(decoder: &mut D, max_len: usize) -> Result<DecodedSeq> {
    let mut state = decoder.initial_state()?;
    let mut prev = BOS_ID;
    let mut out = DecodedSeq {
        ids: Vec::new(),
        attention: Vec::new(),
    };
    while out.ids.len() < max_len {
        let step = decoder.step(&state, prev)?;
        let id = pick_argmax(&step.log_probs)?;
        out.ids.push(id);
        out.attention.push(step.attention);
        state = step.state;
        prev = id;
        if id == EOS_ID {
            break;
        }
    }
    Ok(out)
}

struct Hyp<S> {
    ids: Vec<u32>,
    attention: Vec<StepAttention>,
    state: S,
    sum_lp: f64,
}

impl<S> Hyp<S> {
    fn norm_score(&self) -> f64 {
        self.sum_lp / self.ids.len().max(1) as f64
    }
}

/// Length-normalized beam search: hypotheses are ranked by mean token
/// log-probability; score ties break by token id, then by hypothesis
/// order. Returns the best finished hypothesis, falling back to the best
/// live one when nothing finished within `max_len`.
pub fn beam_decode<D: StepDecoder>(
    decoder: &mut D,
    beam_size: usize,
    max_len: usize,
) -> Result<DecodedSeq> {
    if beam_size == 0 {
        return Err(Error::Model("beam_size must be >= 1".into()));
    }
    let init = decoder.initial_state()?;
    let mut live = vec![Hyp {
        ids: Vec::new(),
        attention: Vec::new(),
        state: init,
        sum_lp: 0.0,
    }];
    let mut finished: Vec<Hyp<D::State>> = Vec::new();

    for _ in 0..max_len {
        if live.is_empty() {
            break;
        }
        let mut outs = Vec::with_capacity(live.len());
        for h in &live {
            let prev = h.ids.last().copied().unwrap_or(BOS_ID);
            outs.push(decoder.step(&h.state, prev)?);
        }
        // candidate = (normalized score, token, parent index)
        let mut candidates: Vec<(f64, u32, usize)> = Vec::new();
        for (pi, out) in outs.iter().enumerate() {
            let new_len = (live[pi].ids.len() + 1) as f64;
            for (tok, lp) in out.log_probs.iter().enumerate() {
                let tok = tok as u32;
                if tok == PAD_ID || tok == BOS_ID {
                    continue;
                }
                candidates.push(((live[pi].sum_lp + lp) / new_len, tok, pi));
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut next_live = Vec::new();
        for &(_, tok, pi) in candidates.iter().take(beam_size) {
            let parent = &live[pi];
            let out = &outs[pi];
            let mut ids = parent.ids.clone();
            ids.push(tok);
            let mut attention = parent.attention.clone();
            attention.push(out.attention.clone());
            let hyp = Hyp {
                ids,
                attention,
                state: out.state.clone(),
                sum_lp: parent.sum_lp + out.log_probs[tok as usize],
            };
            if tok == EOS_ID {
                finished.push(hyp);
            } else {
                next_live.push(hyp);
            }
        }
        live = next_live;
    }

    finished
        .into_iter()
        .chain(live)
        .max_by(|a, b| {
            a.norm_score()
                .partial_cmp(&b.norm_score())
                .unwrap_or(std::cmp::Ordering::Equal)
                // ties prefer the lexicographically smaller sequence
                .then_with(|| b.ids.cmp(&a.ids))
        })
        .map(|h| DecodedSeq {
            ids: h.ids,
            attention: h.attention,
        })
        .ok_or_else(|| Error::Model("beam search produced no hypotheses".into()))
}

/// A decoding session over one example: owns the tape holding the encoded
/// memories, and steps the decoder on demand.
pub struct DecodeSession<'m> {
    model: &'m Model,
    tape: Tape<'m>,
    memories: Memories,
    params: DecoderParams,
}

impl<'m> DecodeSession<'m> {
    pub fn new(model: &'m Model, ex: &PreparedExample) -> Result<DecodeSession<'m>> {
        let mut tape = Tape::new(&model.store);
        let memories = encode_memories(&mut tape, model, ex)?;
        let params = DecoderParams::from_store(&mut tape, model)?;
        Ok(DecodeSession {
            model,
            tape,
            memories,
            params,
        })
    }
}

impl StepDecoder for DecodeSession<'_> {
    type State = Vec<NodeId>;

    fn initial_state(&mut self) -> Result<Vec<NodeId>> {
        self.params.initial_states(&mut self.tape, &self.memories)
    }

    fn step(&mut self, state: &Vec<NodeId>, prev_token: u32) -> Result<StepOutput<Vec<NodeId>>> {
        let (states, logits, attention) =
            self.params
                .step(&mut self.tape, &self.memories, state, prev_token)?;
        let xs = self.tape.value(logits);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let log_probs = xs.iter().map(|x| x - lse).collect();
        Ok(StepOutput {
            state: states,
            log_probs,
            attention,
        })
    }

    fn vocab_size(&self) -> usize {
        self.model.vocabs.tgt.len()
    }
}

/// Decode every example of a split; `beam_size <= 1` decodes greedily.
/// Examples decode in parallel on a read-only model snapshot.
pub fn decode_split(
    model: &Model,
    examples: &[MultimodalExample],
    beam_size: usize,
    max_len: usize,
) -> Result<Vec<Vec<String>>> {
    examples
        .par_iter()
        .map(|ex| {
            let prepared = prepare(model, ex)?;
            let mut session = DecodeSession::new(model, &prepared)?;
            let decoded = if beam_size <= 1 {
                greedy_decode(&mut session, max_len)?
            } else {
                beam_decode(&mut session, beam_size, max_len)?
            };
            model.vocabs.tgt.decode(&decoded.ids)
        })
        .collect()
}

/// Greedy-decode one example and keep its attention trace, rows labeled by
/// the emitted tokens.
pub fn decode_with_trace(
    model: &Model,
    ex: &MultimodalExample,
    max_len: usize,
) -> Result<(Vec<String>, AttentionTrace)> {
    let prepared = prepare(model, ex)?;
    let mut session = DecodeSession::new(model, &prepared)?;
    let decoded = greedy_decode(&mut session, max_len)?;
    let mut steps = Vec::with_capacity(decoded.ids.len());
    for (&id, attention) in decoded.ids.iter().zip(decoded.attention) {
        steps.push(TraceStep {
            token: model.vocabs.tgt.word(id)?.to_string(),
            attention,
        });
    }
    Ok((
        model.vocabs.tgt.decode(&decoded.ids)?,
        AttentionTrace {
            modalities: modality_labels(model.config.variant),
            steps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Scripted decoder over a prefix -> distribution table. Token ids:
    /// 0 PAD, 1 BOS, 2 EOS, 3.. content.
    struct TableDecoder {
        table: HashMap<Vec<u32>, Vec<f64>>,
        vocab: usize,
    }

    impl StepDecoder for TableDecoder {
        type State = Vec<u32>;

        fn initial_state(&mut self) -> Result<Vec<u32>> {
            Ok(Vec::new())
        }

        fn step(&mut self, state: &Vec<u32>, prev: u32) -> Result<StepOutput<Vec<u32>>> {
            let mut consumed = state.clone();
            if prev != BOS_ID {
                consumed.push(prev);
            }
            let probs = self
                .table
                .get(&consumed)
                .unwrap_or_else(|| panic!("no table row for prefix {consumed:?}"));
            Ok(StepOutput {
                state: consumed,
                log_probs: probs.iter().map(|p| p.ln()).collect(),
                attention: StepAttention {
                    weights: vec![],
                    betas: None,
                },
            })
        }

        fn vocab_size(&self) -> usize {
            self.vocab
        }
    }

    /// A table where greedy takes token 3 first but the best mean
    /// log-probability sequence starts with token 4.
    fn greedy_trap() -> TableDecoder {
        let mut table = HashMap::new();
        // columns: PAD, BOS, EOS, a=3, b=4
        table.insert(vec![], vec![1e-9, 1e-9, 0.02, 0.58, 0.40]);
        table.insert(vec![3], vec![1e-9, 1e-9, 0.30, 0.35, 0.35]);
        table.insert(vec![4], vec![1e-9, 1e-9, 0.90, 0.05, 0.05]);
        for prefix in [
            vec![3, 3], vec![3, 4], vec![4, 3], vec![4, 4],
        ] {
            table.insert(prefix, vec![1e-9, 1e-9, 0.80, 0.10, 0.10]);
        }
        for a in [3u32, 4] {
            for b in [3u32, 4] {
                for c in [3u32, 4] {
                    table.insert(vec![a, b, c], vec![1e-9, 1e-9, 0.98, 0.01, 0.01]);
                }
            }
        }
        TableDecoder { table, vocab: 5 }
    }

    /// Exhaustive enumeration of every sequence beam search could return
    /// at max_len 3: token strings of length <= 2 plus EOS, and length-3
    /// strings without EOS. Scores are mean log-probabilities.
    fn enumerate_best(dec: &TableDecoder, max_len: usize) -> (Vec<u32>, f64) {
        let tokens = [3u32, 4];
        let mut best: Option<(Vec<u32>, f64)> = None;
        let mut consider = |seq: Vec<u32>, score: f64| match &best {
            Some((_, s)) if *s >= score => {}
            _ => best = Some((seq, score)),
        };
        fn path_lp(dec: &TableDecoder, seq: &[u32]) -> f64 {
            let mut lp = 0.0;
            for i in 0..seq.len() {
                let prefix = seq[..i].to_vec();
                lp += dec.table[&prefix][seq[i] as usize].ln();
            }
            lp
        }
        // finished sequences: contents of length 0..max_len-1, then EOS
        for len in 0..max_len {
            let mut stack = vec![Vec::new()];
            for _ in 0..len {
                stack = stack
                    .into_iter()
                    .flat_map(|p| {
                        tokens.iter().map(move |t| {
                            let mut q = p.clone();
                            q.push(*t);
                            q
                        }).collect::<Vec<_>>()
                    })
                    .collect();
            }
            for prefix in stack {
                let mut seq = prefix.clone();
                seq.push(EOS_ID);
                let score = path_lp(dec, &seq) / seq.len() as f64;
                consider(seq, score);
            }
        }
        // unfinished length-max_len sequences
        let mut stack = vec![Vec::new()];
        for _ in 0..max_len {
            stack = stack
                .into_iter()
                .flat_map(|p| {
                    tokens.iter().map(move |t| {
                        let mut q = p.clone();
                        q.push(*t);
                        q
                    }).collect::<Vec<_>>()
                })
                .collect();
        }
        for seq in stack {
            let score = path_lp(dec, &seq) / seq.len() as f64;
            consider(seq, score);
        }
        best.unwrap()
    }

    #[test]
    fn beam_two_finds_the_enumerated_optimum() {
        let mut dec = greedy_trap();
        let (best_seq, _) = enumerate_best(&dec, 3);
        assert_eq!(best_seq, vec![4, EOS_ID], "trap constructed as intended");
        let out = beam_decode(&mut dec, 2, 3).unwrap();
        assert_eq!(out.ids, best_seq);
    }

    #[test]
    fn greedy_falls_into_the_trap() {
        let mut dec = greedy_trap();
        let out = greedy_decode(&mut dec, 3).unwrap();
        assert_eq!(out.ids[0], 3, "greedy takes the locally best token");
    }

    #[test]
    fn beam_one_equals_greedy() {
        let mut dec = greedy_trap();
        let greedy = greedy_decode(&mut dec, 3).unwrap();
        let mut dec = greedy_trap();
        let beam = beam_decode(&mut dec, 1, 3).unwrap();
        assert_eq!(greedy.ids, beam.ids);
    }

    #[test]
    fn max_len_one_emits_at_most_one_token() {
        let mut dec = greedy_trap();
        let out = greedy_decode(&mut dec, 1).unwrap();
        assert_eq!(out.ids.len(), 1);
    }

    #[test]
    fn outputs_never_contain_pad_or_bos() {
        let mut dec = greedy_trap();
        let out = beam_decode(&mut dec, 3, 3).unwrap();
        assert!(out.ids.iter().all(|&t| t != PAD_ID && t != BOS_ID));
    }
}
