//! Recurrent, attention, and fusion layers expressed as tape programs, plus
//! the plain (tape-free) softmax and cross-entropy used at decode time.
//!
//! Conventions, fixed so independent oracles agree:
//!
//! - GRU update: z = sigmoid(W_z x + U_z h + b_z), r likewise,
//!   htilde = tanh(W_h x + U_h (r .* h) + b_h), and
//!   h' = (1 - z) .* h + z .* htilde.
//! - Additive attention energies: e_i = v . tanh(W s + U m_i + b).
//! - Conditional GRU: a GRU transition on the input embedding, an attention
//!   read, then a second GRU transition on the context.
//! - Hierarchical fusion: flat attention over per-modality context vectors
//!   with modality-specific output projections.

use super::tape::{softmax_slice, NodeId, Tape};
use super::{Array, ParamStore};
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;

/// Tape node ids for one GRU cell's nine parameters.
#[derive(Debug, Clone)]
pub struct GruParamIds {
    pub w_z: NodeId,
    pub u_z: NodeId,
    pub b_z: NodeId,
    pub w_r: NodeId,
    pub u_r: NodeId,
    pub b_r: NodeId,
    pub w_h: NodeId,
    pub u_h: NodeId,
    pub b_h: NodeId,
}

impl GruParamIds {
    pub fn from_store(tape: &mut Tape, prefix: &str) -> Result<GruParamIds> {
        Ok(GruParamIds {
            w_z: tape.param(&format!("{prefix}.w_z"))?,
            u_z: tape.param(&format!("{prefix}.u_z"))?,
            b_z: tape.param(&format!("{prefix}.b_z"))?,
            w_r: tape.param(&format!("{prefix}.w_r"))?,
            u_r: tape.param(&format!("{prefix}.u_r"))?,
            b_r: tape.param(&format!("{prefix}.b_r"))?,
            w_h: tape.param(&format!("{prefix}.w_h"))?,
            u_h: tape.param(&format!("{prefix}.u_h"))?,
            b_h: tape.param(&format!("{prefix}.b_h"))?,
        })
    }
}

/// Register the nine GRU parameters `<prefix>.{w,u,b}_{z,r,h}` in a store.
/// Weight matrices are uniform-initialized, biases zero.
pub fn register_gru(
    store: &mut ParamStore,
    prefix: &str,
    d_in: usize,
    d_h: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    for gate in ["z", "r", "h"] {
        store.init_uniform(&format!("{prefix}.w_{gate}"), &[d_h, d_in], rng)?;
        store.init_uniform(&format!("{prefix}.u_{gate}"), &[d_h, d_h], rng)?;
        store.init_zeros(&format!("{prefix}.b_{gate}"), &[d_h])?;
    }
    Ok(())
}

/// One GRU transition.
pub fn gru_cell(tape: &mut Tape, x: NodeId, h_prev: NodeId, p: &GruParamIds) -> Result<NodeId> {
    let gate = |tape: &mut Tape, w, u, b| -> Result<NodeId> {
        let wx = tape.matvec(w, x)?;
        let uh = tape.matvec(u, h_prev)?;
        let s = tape.add(wx, uh)?;
        tape.add(s, b)
    };
    let z_pre = gate(tape, p.w_z, p.u_z, p.b_z)?;
    let z = tape.sigmoid(z_pre)?;
    let r_pre = gate(tape, p.w_r, p.u_r, p.b_r)?;
    let r = tape.sigmoid(r_pre)?;

    let rh = tape.mul(r, h_prev)?;
    let wx = tape.matvec(p.w_h, x)?;
    let urh = tape.matvec(p.u_h, rh)?;
    let pre = tape.add(wx, urh)?;
    let pre = tape.add(pre, p.b_h)?;
    let h_tilde = tape.tanh(pre)?;

    let keep = tape.one_minus(z)?;
    let a = tape.mul(keep, h_prev)?;
    let b = tape.mul(z, h_tilde)?;
    tape.add(a, b)
}

/// Run a multi-layer bidirectional GRU over a sequence. Each layer reads the
/// previous layer's per-step outputs; per-step outputs are the forward and
/// backward states concatenated, so their dimension is 2 * d_h.
///
/// Parameters are looked up under `<prefix>.l<k>.fwd` and `<prefix>.l<k>.bwd`.
pub fn run_bigru(
    tape: &mut Tape,
    seq: &[NodeId],
    prefix: &str,
    layers: usize,
) -> Result<Vec<NodeId>> {
    if seq.is_empty() {
        return Err(Error::Numcore("run_bigru: empty sequence".into()));
    }
    if layers == 0 {
        return Err(Error::Numcore("run_bigru: layers must be >= 1".into()));
    }
    let mut states: Vec<NodeId> = seq.to_vec();
    for layer in 0..layers {
        let fwd = GruParamIds::from_store(tape, &format!("{prefix}.l{layer}.fwd"))?;
        let bwd = GruParamIds::from_store(tape, &format!("{prefix}.l{layer}.bwd"))?;
        let d_h = tape.shape(fwd.u_z)[0];
        let h0 = tape.input(&vec![0.0; d_h]);

        let mut fwd_states = Vec::with_capacity(states.len());
        let mut h = h0;
        for &x in &states {
            h = gru_cell(tape, x, h, &fwd)?;
            fwd_states.push(h);
        }
        let mut bwd_states = vec![h0; states.len()];
        let mut h = h0;
        for (t, &x) in states.iter().enumerate().rev() {
            h = gru_cell(tape, x, h, &bwd)?;
            bwd_states[t] = h;
        }
        let mut next = Vec::with_capacity(states.len());
        for t in 0..states.len() {
            next.push(tape.concat(&[fwd_states[t], bwd_states[t]])?);
        }
        states = next;
    }
    Ok(states)
}

/// Tape node ids for one additive-attention block.
#[derive(Debug, Clone)]
pub struct AttnParamIds {
    pub w: NodeId,
    pub u: NodeId,
    pub v: NodeId,
    pub b: NodeId,
}

impl AttnParamIds {
    pub fn from_store(tape: &mut Tape, prefix: &str) -> Result<AttnParamIds> {
        Ok(AttnParamIds {
            w: tape.param(&format!("{prefix}.w"))?,
            u: tape.param(&format!("{prefix}.u"))?,
            v: tape.param(&format!("{prefix}.v"))?,
            b: tape.param(&format!("{prefix}.b"))?,
        })
    }
}

/// Register attention parameters for a query of dimension `d_s`, memory
/// entries of dimension `d_m`, and an energy layer of dimension `d_a`.
pub fn register_attention(
    store: &mut ParamStore,
    prefix: &str,
    d_s: usize,
    d_m: usize,
    d_a: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    store.init_uniform(&format!("{prefix}.w"), &[d_a, d_s], rng)?;
    store.init_uniform(&format!("{prefix}.u"), &[d_a, d_m], rng)?;
    store.init_uniform(&format!("{prefix}.v"), &[d_a], rng)?;
    store.init_zeros(&format!("{prefix}.b"), &[d_a])?;
    Ok(())
}

/// Additive attention: softmax-normalized energies over the memory and the
/// weighted context vector.
pub fn attend(
    tape: &mut Tape,
    state: NodeId,
    memory: &[NodeId],
    p: &AttnParamIds,
) -> Result<(NodeId, NodeId)> {
    if memory.is_empty() {
        return Err(Error::Numcore("attend: empty memory".into()));
    }
    let ws = tape.matvec(p.w, state)?;
    let mut energies = Vec::with_capacity(memory.len());
    for &m in memory {
        let um = tape.matvec(p.u, m)?;
        let s = tape.add(ws, um)?;
        let s = tape.add(s, p.b)?;
        let t = tape.tanh(s)?;
        energies.push(tape.dot(p.v, t)?);
    }
    let stacked = tape.concat(&energies)?;
    let weights = tape.softmax(stacked)?;
    let context = tape.weighted_sum(weights, memory)?;
    Ok((weights, context))
}

/// Parameters of a conditional GRU decoder step.
#[derive(Debug, Clone)]
pub struct CgruParamIds {
    pub gru_in: GruParamIds,
    pub attn: AttnParamIds,
    pub gru_ctx: GruParamIds,
}

impl CgruParamIds {
    pub fn from_store(tape: &mut Tape, prefix: &str) -> Result<CgruParamIds> {
        Ok(CgruParamIds {
            gru_in: GruParamIds::from_store(tape, &format!("{prefix}.gru_in"))?,
            attn: AttnParamIds::from_store(tape, &format!("{prefix}.attn"))?,
            gru_ctx: GruParamIds::from_store(tape, &format!("{prefix}.gru_ctx"))?,
        })
    }
}

pub fn register_cgru(
    store: &mut ParamStore,
    prefix: &str,
    d_emb: usize,
    d_h: usize,
    d_m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    register_gru(store, &format!("{prefix}.gru_in"), d_emb, d_h, rng)?;
    register_attention(store, &format!("{prefix}.attn"), d_h, d_m, d_h, rng)?;
    register_gru(store, &format!("{prefix}.gru_ctx"), d_m, d_h, rng)?;
    Ok(())
}

/// One conditional-GRU decoder step: GRU on the embedding, attention read,
/// GRU on the context.
pub fn cgru_step(
    tape: &mut Tape,
    y_emb: NodeId,
    s_prev: NodeId,
    memory: &[NodeId],
    p: &CgruParamIds,
) -> Result<(NodeId, NodeId, NodeId)> {
    let s_mid = gru_cell(tape, y_emb, s_prev, &p.gru_in)?;
    let (weights, context) = attend(tape, s_mid, memory, &p.attn)?;
    let s_new = gru_cell(tape, context, s_mid, &p.gru_ctx)?;
    Ok((s_new, context, weights))
}

/// Parameters of the hierarchical fusion block over K modalities.
#[derive(Debug, Clone)]
pub struct FuseParamIds {
    pub w: NodeId,
    pub v: NodeId,
    pub b: NodeId,
    pub u: Vec<NodeId>,
    pub proj: Vec<NodeId>,
}

impl FuseParamIds {
    pub fn from_store(tape: &mut Tape, prefix: &str, modalities: usize) -> Result<FuseParamIds> {
        let mut u = Vec::with_capacity(modalities);
        let mut proj = Vec::with_capacity(modalities);
        for k in 0..modalities {
            u.push(tape.param(&format!("{prefix}.u{k}"))?);
            proj.push(tape.param(&format!("{prefix}.proj{k}"))?);
        }
        Ok(FuseParamIds {
            w: tape.param(&format!("{prefix}.w"))?,
            v: tape.param(&format!("{prefix}.v"))?,
            b: tape.param(&format!("{prefix}.b"))?,
            u,
            proj,
        })
    }
}

pub fn register_fuse(
    store: &mut ParamStore,
    prefix: &str,
    d_s: usize,
    d_ctx: usize,
    d_a: usize,
    modalities: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    store.init_uniform(&format!("{prefix}.w"), &[d_a, d_s], rng)?;
    store.init_uniform(&format!("{prefix}.v"), &[d_a], rng)?;
    store.init_zeros(&format!("{prefix}.b"), &[d_a])?;
    for k in 0..modalities {
        store.init_uniform(&format!("{prefix}.u{k}"), &[d_a, d_ctx], rng)?;
        store.init_uniform(&format!("{prefix}.proj{k}"), &[d_ctx, d_ctx], rng)?;
    }
    Ok(())
}

/// Fuse per-modality context vectors: attention over the contexts, then a
/// weighted sum of modality-projected contexts.
pub fn hier_fuse(
    tape: &mut Tape,
    state: NodeId,
    contexts: &[NodeId],
    p: &FuseParamIds,
) -> Result<(NodeId, NodeId)> {
    if contexts.is_empty() {
        return Err(Error::Numcore("hier_fuse: no modality contexts".into()));
    }
    if contexts.len() != p.u.len() || contexts.len() != p.proj.len() {
        return Err(Error::Numcore(format!(
            "hier_fuse: {} contexts for {} modality parameter sets",
            contexts.len(),
            p.u.len()
        )));
    }
    let ws = tape.matvec(p.w, state)?;
    let mut energies = Vec::with_capacity(contexts.len());
    for (k, &ctx) in contexts.iter().enumerate() {
        let uc = tape.matvec(p.u[k], ctx)?;
        let s = tape.add(ws, uc)?;
        let s = tape.add(s, p.b)?;
        let t = tape.tanh(s)?;
        energies.push(tape.dot(p.v, t)?);
    }
    let stacked = tape.concat(&energies)?;
    let betas = tape.softmax(stacked)?;
    let mut projected = Vec::with_capacity(contexts.len());
    for (k, &ctx) in contexts.iter().enumerate() {
        projected.push(tape.matvec(p.proj[k], ctx)?);
    }
    let fused = tape.weighted_sum(betas, &projected)?;
    Ok((fused, betas))
}

/// Softmax of a vector as a plain function (no tape).
pub fn softmax(v: &Array) -> Array {
    Array::vector(softmax_slice(v.data()))
}

/// -log softmax(logits)[target] as a plain function.
pub fn cross_entropy(logits: &Array, target: usize) -> Result<f64> {
    if target >= logits.numel() {
        return Err(Error::Numcore(format!(
            "cross_entropy: target {target} out of range for {} logits",
            logits.numel()
        )));
    }
    let xs = logits.data();
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(lse - xs[target])
}
