//! Recorded computation for reverse-mode differentiation.
//!
//! A `Tape` is an append-only arena of nodes. Every op computes its value
//! eagerly and records how it was produced; `backward` replays the record in
//! reverse, which visits each node after all of its consumers because ops
//! can only reference earlier nodes. Parameter leaves borrow their values
//! from the `ParamStore`, so building a tape never copies weights.

use super::{Array, ParamStore};
use crate::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Value {
    Owned(Vec<f64>),
    Param(usize),
}

enum Op {
    Leaf,
    MatVec(NodeId, NodeId),
    GatherRow(NodeId, usize),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    OneMinus(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Dot(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Softmax(NodeId),
    WeightedSum(NodeId, Vec<NodeId>),
    SumN(Vec<NodeId>),
    CrossEntropy(NodeId, usize),
}

struct Node {
    shape: Vec<usize>,
    value: Value,
    op: Op,
}

pub struct Tape<'s> {
    store: &'s ParamStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<usize, NodeId>,
}

/// Numerically stable softmax on a slice.
pub fn softmax_slice(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'s> Tape<'s> {
    pub fn new(store: &'s ParamStore) -> Tape<'s> {
        Tape {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn store(&self) -> &ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Resolved value of a node.
    pub fn value(&self, id: NodeId) -> &[f64] {
        match &self.nodes[id.0].value {
            Value::Owned(v) => v,
            Value::Param(p) => self.store.at(*p).data(),
        }
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    fn describe(&self, id: NodeId) -> String {
        match &self.nodes[id.0].value {
            Value::Param(p) => format!("parameter '{}'", self.store.name_at(*p)),
            Value::Owned(_) => format!("node #{}", id.0),
        }
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            shape,
            value: Value::Owned(value),
            op,
        });
        id
    }

    /// Leaf node referencing a store parameter. Repeated requests for one
    /// parameter return the same node so its gradient accumulates in one
    /// place.
    pub fn param(&mut self, name: &str) -> Result<NodeId> {
        let idx = self
            .store
            .idx(name)
            .ok_or_else(|| Error::Numcore(format!("unknown parameter '{name}'")))?;
        if let Some(&id) = self.param_nodes.get(&idx) {
            return Ok(id);
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            shape: self.store.at(idx).shape().to_vec(),
            value: Value::Param(idx),
            op: Op::Leaf,
        });
        self.param_nodes.insert(idx, id);
        Ok(id)
    }

    /// Constant input leaf (no gradient is reported for it).
    pub fn input(&mut self, values: &[f64]) -> NodeId {
        self.push(vec![values.len()], values.to_vec(), Op::Leaf)
    }

    fn check_vector(&self, id: NodeId, ctx: &str) -> Result<usize> {
        let shape = self.shape(id);
        if shape.len() != 1 {
            return Err(Error::Numcore(format!(
                "{ctx}: expected a vector, got shape {shape:?} from {}",
                self.describe(id)
            )));
        }
        Ok(shape[0])
    }

    fn check_same_len(&self, a: NodeId, b: NodeId, ctx: &str) -> Result<usize> {
        let la = self.check_vector(a, ctx)?;
        let lb = self.check_vector(b, ctx)?;
        if la != lb {
            return Err(Error::Numcore(format!(
                "{ctx}: length mismatch {la} vs {lb} ({} vs {})",
                self.describe(a),
                self.describe(b)
            )));
        }
        Ok(la)
    }

    /// y = W x for a rank-2 `w` of shape [r, c] and vector `x` of length c.
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId> {
        let w_shape = self.shape(w);
        if w_shape.len() != 2 {
            return Err(Error::Numcore(format!(
                "matvec: expected a matrix, got shape {w_shape:?} from {}",
                self.describe(w)
            )));
        }
        let (rows, cols) = (w_shape[0], w_shape[1]);
        let xl = self.check_vector(x, "matvec")?;
        if xl != cols {
            return Err(Error::Numcore(format!(
                "matvec: {} has {cols} columns but {} has length {xl}",
                self.describe(w),
                self.describe(x)
            )));
        }
        let wv = self.value(w);
        let xv = self.value(x);
        let mut out = vec![0.0; rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &wv[i * cols..(i + 1) * cols];
            *o = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        Ok(self.push(vec![rows], out, Op::MatVec(w, x)))
    }

    /// Row `row` of a rank-2 node (embedding lookup).
    pub fn gather_row(&mut self, m: NodeId, row: usize) -> Result<NodeId> {
        let shape = self.shape(m);
        if shape.len() != 2 {
            return Err(Error::Numcore(format!(
                "gather_row: expected a matrix, got shape {shape:?} from {}",
                self.describe(m)
            )));
        }
        let (rows, cols) = (shape[0], shape[1]);
        if row >= rows {
            return Err(Error::Numcore(format!(
                "gather_row: row {row} out of range for {} with {rows} rows",
                self.describe(m)
            )));
        }
        let out = self.value(m)[row * cols..(row + 1) * cols].to_vec();
        Ok(self.push(vec![cols], out, Op::GatherRow(m, row)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let n = self.check_same_len(a, b, "add")?;
        let mut out = vec![0.0; n];
        for ((o, x), y) in out.iter_mut().zip(self.value(a)).zip(self.value(b)) {
            *o = x + y;
        }
        Ok(self.push(vec![n], out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let n = self.check_same_len(a, b, "sub")?;
        let mut out = vec![0.0; n];
        for ((o, x), y) in out.iter_mut().zip(self.value(a)).zip(self.value(b)) {
            *o = x - y;
        }
        Ok(self.push(vec![n], out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let n = self.check_same_len(a, b, "mul")?;
        let mut out = vec![0.0; n];
        for ((o, x), y) in out.iter_mut().zip(self.value(a)).zip(self.value(b)) {
            *o = x * y;
        }
        Ok(self.push(vec![n], out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> Result<NodeId> {
        let n = self.check_vector(x, "scale")?;
        let out = self.value(x).iter().map(|v| v * c).collect();
        Ok(self.push(vec![n], out, Op::Scale(x, c)))
    }

    /// 1 - x elementwise.
    pub fn one_minus(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.check_vector(x, "one_minus")?;
        let out = self.value(x).iter().map(|v| 1.0 - v).collect();
        Ok(self.push(vec![n], out, Op::OneMinus(x)))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.check_vector(x, "sigmoid")?;
        let out = self.value(x).iter().map(|&v| sigmoid(v)).collect();
        Ok(self.push(vec![n], out, Op::Sigmoid(x)))
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.check_vector(x, "tanh")?;
        let out = self.value(x).iter().map(|v| v.tanh()).collect();
        Ok(self.push(vec![n], out, Op::Tanh(x)))
    }

    /// Inner product of two equal-length vectors; scalar output.
    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_same_len(a, b, "dot")?;
        let v: f64 = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .sum();
        Ok(self.push(vec![1], vec![v], Op::Dot(a, b)))
    }

    /// Concatenate vectors in order.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Numcore("concat: no inputs".into()));
        }
        let mut out = Vec::new();
        for &p in parts {
            self.check_vector(p, "concat")?;
            out.extend_from_slice(self.value(p));
        }
        let n = out.len();
        Ok(self.push(vec![n], out, Op::Concat(parts.to_vec())))
    }

    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let n = self.check_vector(x, "softmax")?;
        let out = softmax_slice(self.value(x));
        Ok(self.push(vec![n], out, Op::Softmax(x)))
    }

    /// Sum_i weights[i] * items[i] for equal-shaped item vectors.
    pub fn weighted_sum(&mut self, weights: NodeId, items: &[NodeId]) -> Result<NodeId> {
        let t = self.check_vector(weights, "weighted_sum")?;
        if items.len() != t {
            return Err(Error::Numcore(format!(
                "weighted_sum: {t} weights for {} items",
                items.len()
            )));
        }
        let d = self.check_vector(items[0], "weighted_sum")?;
        let mut out = vec![0.0; d];
        for (i, &item) in items.iter().enumerate() {
            let di = self.check_vector(item, "weighted_sum")?;
            if di != d {
                return Err(Error::Numcore(format!(
                    "weighted_sum: item length mismatch {di} vs {d}"
                )));
            }
            let w = self.value(weights)[i];
            for (o, v) in out.iter_mut().zip(self.value(item)) {
                *o += w * v;
            }
        }
        Ok(self.push(vec![d], out, Op::WeightedSum(weights, items.to_vec())))
    }

    /// Elementwise sum of equal-shaped vectors.
    pub fn sum_nodes(&mut self, items: &[NodeId]) -> Result<NodeId> {
        if items.is_empty() {
            return Err(Error::Numcore("sum_nodes: no inputs".into()));
        }
        let d = self.check_vector(items[0], "sum_nodes")?;
        let mut out = vec![0.0; d];
        for &item in items {
            if self.check_vector(item, "sum_nodes")? != d {
                return Err(Error::Numcore("sum_nodes: length mismatch".into()));
            }
            for (o, v) in out.iter_mut().zip(self.value(item)) {
                *o += v;
            }
        }
        Ok(self.push(vec![d], out, Op::SumN(items.to_vec())))
    }

    /// -log softmax(logits)[target]; scalar output.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> Result<NodeId> {
        let n = self.check_vector(logits, "cross_entropy")?;
        if target >= n {
            return Err(Error::Numcore(format!(
                "cross_entropy: target {target} out of range for {n} logits"
            )));
        }
        let xs = self.value(logits);
        let loss = log_sum_exp(xs) - xs[target];
        Ok(self.push(vec![1], vec![loss], Op::CrossEntropy(logits, target)))
    }

    /// Reverse-mode gradients of a scalar loss with respect to every store
    /// parameter. Parameters that do not reach the loss get zero gradients.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.shape(loss) != [1] {
            return Err(Error::Numcore(format!(
                "backward: loss must be scalar, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(vec![1.0]);
        let mut grads: Vec<Array> = self
            .store
            .names()
            .iter()
            .enumerate()
            .map(|(i, _)| Array::zeros(self.store.at(i).shape()))
            .collect();

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    if let Value::Param(p) = &node.value {
                        for (dst, src) in grads[*p].data_mut().iter_mut().zip(&g) {
                            *dst += src;
                        }
                    }
                }
                Op::MatVec(w, x) => {
                    let cols = self.shape(*x)[0];
                    let wv = self.value(*w);
                    let xv = self.value(*x);
                    {
                        let gw = acc(&mut adj, *w, wv.len());
                        for (r, gr) in g.iter().enumerate() {
                            for (c, xc) in xv.iter().enumerate() {
                                gw[r * cols + c] += gr * xc;
                            }
                        }
                    }
                    let gx = acc(&mut adj, *x, cols);
                    for (r, gr) in g.iter().enumerate() {
                        let row = &wv[r * cols..(r + 1) * cols];
                        for (c, wc) in row.iter().enumerate() {
                            gx[c] += wc * gr;
                        }
                    }
                }
                Op::GatherRow(m, row) => {
                    let cols = g.len();
                    let total = self.value(*m).len();
                    let gm = acc(&mut adj, *m, total);
                    for (c, gc) in g.iter().enumerate() {
                        gm[row * cols + c] += gc;
                    }
                }
                Op::Add(a, b) => {
                    add_into(acc(&mut adj, *a, g.len()), &g, 1.0);
                    add_into(acc(&mut adj, *b, g.len()), &g, 1.0);
                }
                Op::Sub(a, b) => {
                    add_into(acc(&mut adj, *a, g.len()), &g, 1.0);
                    add_into(acc(&mut adj, *b, g.len()), &g, -1.0);
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a).to_vec();
                    let bv = self.value(*b);
                    {
                        let ga = acc(&mut adj, *a, g.len());
                        for ((d, gc), y) in ga.iter_mut().zip(&g).zip(bv) {
                            *d += gc * y;
                        }
                    }
                    let gb = acc(&mut adj, *b, g.len());
                    for ((d, gc), x) in gb.iter_mut().zip(&g).zip(&av) {
                        *d += gc * x;
                    }
                }
                Op::Scale(x, c) => add_into(acc(&mut adj, *x, g.len()), &g, *c),
                Op::OneMinus(x) => add_into(acc(&mut adj, *x, g.len()), &g, -1.0),
                Op::Sigmoid(x) => {
                    let y = owned(&node.value);
                    let gx = acc(&mut adj, *x, g.len());
                    for ((d, gc), yi) in gx.iter_mut().zip(&g).zip(y) {
                        *d += gc * yi * (1.0 - yi);
                    }
                }
                Op::Tanh(x) => {
                    let y = owned(&node.value);
                    let gx = acc(&mut adj, *x, g.len());
                    for ((d, gc), yi) in gx.iter_mut().zip(&g).zip(y) {
                        *d += gc * (1.0 - yi * yi);
                    }
                }
                Op::Dot(a, b) => {
                    let g0 = g[0];
                    let av = self.value(*a).to_vec();
                    let bv = self.value(*b).to_vec();
                    add_into(acc(&mut adj, *a, bv.len()), &bv, g0);
                    add_into(acc(&mut adj, *b, av.len()), &av, g0);
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.shape(p)[0];
                        add_into(acc(&mut adj, p, n), &g[off..off + n], 1.0);
                        off += n;
                    }
                }
                Op::Softmax(x) => {
                    let y = owned(&node.value);
                    let dot: f64 = g.iter().zip(y).map(|(gc, yc)| gc * yc).sum();
                    let gx = acc(&mut adj, *x, g.len());
                    for ((d, gc), yc) in gx.iter_mut().zip(&g).zip(y) {
                        *d += yc * (gc - dot);
                    }
                }
                Op::WeightedSum(weights, items) => {
                    let wv = self.value(*weights).to_vec();
                    for (i, &item) in items.iter().enumerate() {
                        let dot: f64 = g.iter().zip(self.value(item)).map(|(a, b)| a * b).sum();
                        acc(&mut adj, *weights, wv.len())[i] += dot;
                        let item_len = self.value(item).len();
                        add_into(acc(&mut adj, item, item_len), &g, wv[i]);
                    }
                }
                Op::SumN(items) => {
                    for &item in items {
                        add_into(acc(&mut adj, item, g.len()), &g, 1.0);
                    }
                }
                Op::CrossEntropy(logits, target) => {
                    let probs = softmax_slice(self.value(*logits));
                    let g0 = g[0];
                    let gx = acc(&mut adj, *logits, probs.len());
                    for (j, (d, p)) in gx.iter_mut().zip(&probs).enumerate() {
                        let indicator = if j == *target { 1.0 } else { 0.0 };
                        *d += g0 * (p - indicator);
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn owned(v: &Value) -> &[f64] {
    match v {
        Value::Owned(data) => data,
        Value::Param(_) => unreachable!("op outputs are always owned"),
    }
}

fn acc(adj: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    adj[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s * scale;
    }
}

/// Per-parameter gradients parallel to a `ParamStore`'s layout.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Array>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Gradients {
        Gradients {
            grads: (0..store.len())
                .map(|i| Array::zeros(store.at(i).shape()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn at(&self, idx: usize) -> &Array {
        &self.grads[idx]
    }

    pub fn get<'a>(&'a self, store: &ParamStore, name: &str) -> Option<&'a Array> {
        store.idx(name).map(|i| &self.grads[i])
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        debug_assert_eq!(self.grads.len(), other.grads.len());
        for (dst, src) in self.grads.iter_mut().zip(&other.grads) {
            for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for g in &mut self.grads {
            for v in g.data_mut() {
                *v *= c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient() {
        // f(w) = w^2 at w = 3 -> df/dw = 6
        let mut store = ParamStore::new();
        store.insert("w", Array::scalar(3.0)).unwrap();
        let mut tape = Tape::new(&store);
        let w = tape.param("w").unwrap();
        let f = tape.mul(w, w).unwrap();
        assert_eq!(tape.value(f), &[9.0]);
        let grads = tape.backward(f).unwrap();
        assert_eq!(grads.get(&store, "w").unwrap().data(), &[6.0]);
    }

    #[test]
    fn product_gradient() {
        // f(a, b) = a * b at (2, 5) -> grads (5, 2)
        let mut store = ParamStore::new();
        store.insert("a", Array::scalar(2.0)).unwrap();
        store.insert("b", Array::scalar(5.0)).unwrap();
        let mut tape = Tape::new(&store);
        let a = tape.param("a").unwrap();
        let b = tape.param("b").unwrap();
        let f = tape.mul(a, b).unwrap();
        let grads = tape.backward(f).unwrap();
        assert_eq!(grads.get(&store, "a").unwrap().data(), &[5.0]);
        assert_eq!(grads.get(&store, "b").unwrap().data(), &[2.0]);
    }

    #[test]
    fn off_path_parameter_gets_zero_gradient() {
        let mut store = ParamStore::new();
        store.insert("used", Array::scalar(2.0)).unwrap();
        store.insert("unused", Array::vector(vec![1.0, 1.0])).unwrap();
        let mut tape = Tape::new(&store);
        let w = tape.param("used").unwrap();
        let f = tape.mul(w, w).unwrap();
        let grads = tape.backward(f).unwrap();
        assert_eq!(grads.get(&store, "unused").unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut store = ParamStore::new();
        store.insert("w", Array::vector(vec![1.0, 2.0])).unwrap();
        let mut tape = Tape::new(&store);
        let w = tape.param("w").unwrap();
        assert!(tape.backward(w).is_err());
    }

    #[test]
    fn matvec_shape_error_names_parameter() {
        let mut store = ParamStore::new();
        store
            .insert("enc.w", Array::from_vec(&[2, 3], vec![0.0; 6]).unwrap())
            .unwrap();
        let mut tape = Tape::new(&store);
        let w = tape.param("enc.w").unwrap();
        let x = tape.input(&[1.0, 2.0]);
        let err = tape.matvec(w, x).unwrap_err();
        assert!(err.to_string().contains("enc.w"), "{err}");
    }

    #[test]
    fn softmax_sums_to_one_and_shift_invariant() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let x = tape.input(&[0.0, 0.0, 0.0]);
        let s = tape.softmax(x).unwrap();
        for v in tape.value(s) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let y = tape.input(&[1.0, 2.0, 3.0]);
        let sy = tape.softmax(y).unwrap();
        let y_shift = tape.input(&[1.0 + 7.5, 2.0 + 7.5, 3.0 + 7.5]);
        let sy_shift = tape.softmax(y_shift).unwrap();
        for (a, b) in tape.value(sy).iter().zip(tape.value(sy_shift)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let logits = tape.input(&[0.5, 0.5, 0.5, 0.5]);
        let loss = tape.cross_entropy(logits, 2).unwrap();
        assert!((tape.value(loss)[0] - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_target_out_of_range() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let logits = tape.input(&[0.0, 0.0]);
        assert!(tape.cross_entropy(logits, 2).is_err());
    }

    #[test]
    fn chain_through_many_ops_matches_hand_derivative() {
        // f(w) = tanh(sigmoid(2w) * w) at w = 0.7, checked against a
        // finite-difference estimate computed in the test.
        let eval = |w: f64| (sigmoid(2.0 * w) * w).tanh();
        let w0 = 0.7;
        let eps = 1e-6;
        let fd = (eval(w0 + eps) - eval(w0 - eps)) / (2.0 * eps);

        let mut store = ParamStore::new();
        store.insert("w", Array::scalar(w0)).unwrap();
        let mut tape = Tape::new(&store);
        let w = tape.param("w").unwrap();
        let tw = tape.scale(w, 2.0).unwrap();
        let s = tape.sigmoid(tw).unwrap();
        let p = tape.mul(s, w).unwrap();
        let f = tape.tanh(p).unwrap();
        let grads = tape.backward(f).unwrap();
        let g = grads.get(&store, "w").unwrap().data()[0];
        assert!((g - fd).abs() < 1e-8, "analytic {g} vs fd {fd}");
    }

    #[test]
    fn gather_row_routes_gradient_to_one_row() {
        let mut store = ParamStore::new();
        store
            .insert("emb", Array::from_vec(&[3, 2], vec![1., 2., 3., 4., 5., 6.]).unwrap())
            .unwrap();
        let mut tape = Tape::new(&store);
        let emb = tape.param("emb").unwrap();
        let row = tape.gather_row(emb, 1).unwrap();
        assert_eq!(tape.value(row), &[3.0, 4.0]);
        let f = tape.dot(row, row).unwrap();
        let grads = tape.backward(f).unwrap();
        let g = grads.get(&store, "emb").unwrap();
        assert_eq!(g.data(), &[0., 0., 6., 8., 0., 0.]);
    }
}
