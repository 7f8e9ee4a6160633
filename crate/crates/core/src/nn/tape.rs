//! Reverse-mode automatic differentiation over small dense tensors.
//!
//! A [`Tape`] records every operation of one forward pass as a node holding
//! its value. [`Tape::backward`] walks the nodes in reverse and returns the
//! gradient of a scalar loss with respect to every node; gradients reaching
//! parameter leaves can then be accumulated into a [`ParamStore`].
//!
//! Tapes are built per invocation and never shared between threads.

use crate::error::{shape_err, Result};
use crate::nn::lstm::{lstm_backward, lstm_forward, LstmCache, LstmWeights};
use crate::nn::tensor::{matvec, matvec_t_acc, outer_acc};
use crate::nn::{ParamId, ParamStore, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => sigmoid(v),
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax of a slice.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

enum Op {
    Leaf,
    Param(ParamId),
    Linear {
        w: Var,
        x: Var,
        b: Option<Var>,
        rows: usize,
        cols: usize,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    AddScalar {
        v: Var,
        s: Var,
    },
    Act(Var, Activation),
    Softmax(Var),
    Sum(Var),
    SumSquares(Var),
    Dot(Var, Var),
    Concat(Vec<Var>),
    Slice {
        x: Var,
        start: usize,
    },
    AddN(Vec<Var>),
    CrossEntropy {
        logits: Var,
        target: usize,
        probs: Vec<f64>,
    },
    Lstm {
        x: Var,
        h: Var,
        c: Var,
        w_ih: Var,
        w_hh: Var,
        b: Var,
        cache: LstmCache,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar with respect to every node of a tape.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Scales every gradient; used by fault-injection tests.
    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

fn same_len(tape: &Tape, a: Var, b: Var, what: &str) -> Result<usize> {
    let (la, lb) = (tape.len_of(a), tape.len_of(b));
    if la != lb {
        return shape_err(format!("{what}: length {la} vs {lb}"));
    }
    Ok(la)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data()[0]
    }

    fn len_of(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn constant_vec(&mut self, data: Vec<f64>) -> Var {
        self.push(Tensor::vector(data), Op::Leaf)
    }

    /// Leaf holding a copy of a parameter's current value.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    /// `W x + b` with `W` a `rows × cols` matrix.
    pub fn linear(&mut self, w: Var, x: Var, b: Option<Var>) -> Result<Var> {
        let ws = self.value(w).shape();
        if ws.len() != 2 {
            return shape_err(format!("linear: weight must be a matrix, got {ws:?}"));
        }
        let (rows, cols) = (ws[0], ws[1]);
        if self.len_of(x) != cols {
            return shape_err(format!(
                "linear: weight {rows}x{cols} vs input {}",
                self.len_of(x)
            ));
        }
        if let Some(b) = b {
            if self.len_of(b) != rows {
                return shape_err(format!("linear: bias {} vs {rows} rows", self.len_of(b)));
            }
        }
        let mut out = vec![0.0; rows];
        matvec(
            self.data(w),
            rows,
            cols,
            self.data(x),
            b.map(|b| self.data(b)),
            &mut out,
        );
        Ok(self.push(
            Tensor::vector(out),
            Op::Linear {
                w,
                x,
                b,
                rows,
                cols,
            },
        ))
    }

    fn zip_with(
        &mut self,
        a: Var,
        b: Var,
        what: &str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        same_len(self, a, b, what)?;
        let out: Vec<f64> = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| f(*x, *y))
            .collect();
        Ok(self.push(Tensor::vector(out), op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "div", |x, y| x / y, Op::Div(a, b))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out: Vec<f64> = self.data(a).iter().map(|v| v * k).collect();
        self.push(Tensor::vector(out), Op::Scale(a, k))
    }

    pub fn add_const(&mut self, a: Var, k: f64) -> Var {
        let out: Vec<f64> = self.data(a).iter().map(|v| v + k).collect();
        self.push(Tensor::vector(out), Op::AddConst(a))
    }

    /// Adds the single-element `s` to every entry of `v`.
    pub fn add_scalar(&mut self, v: Var, s: Var) -> Result<Var> {
        if self.len_of(s) != 1 {
            return shape_err("add_scalar: second operand must have one element");
        }
        let k = self.scalar(s);
        let out: Vec<f64> = self.data(v).iter().map(|x| x + k).collect();
        Ok(self.push(Tensor::vector(out), Op::AddScalar { v, s }))
    }

    pub fn activation(&mut self, a: Var, act: Activation) -> Var {
        let out: Vec<f64> = self.data(a).iter().map(|v| act.apply(*v)).collect();
        self.push(Tensor::vector(out), Op::Act(a, act))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Sigmoid)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Relu)
    }

    /// Softmax over the (flattened) entries of `a`.
    pub fn softmax(&mut self, a: Var) -> Var {
        let out = softmax(self.data(a));
        self.push(Tensor::vector(out), Op::Softmax(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.data(a).iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.len_of(a) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s: f64 = self.data(a).iter().map(|v| v * v).sum();
        self.push(Tensor::scalar(s), Op::SumSquares(a))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        same_len(self, a, b, "dot")?;
        let s: f64 = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(x, y)| x * y)
            .sum();
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b)))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::with_capacity(parts.iter().map(|p| self.len_of(*p)).sum());
        for p in parts {
            out.extend_from_slice(self.data(*p));
        }
        self.push(Tensor::vector(out), Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        if start + len > self.len_of(x) {
            return shape_err(format!(
                "slice [{start}, {}) out of bounds for length {}",
                start + len,
                self.len_of(x)
            ));
        }
        let out = self.data(x)[start..start + len].to_vec();
        Ok(self.push(Tensor::vector(out), Op::Slice { x, start }))
    }

    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return shape_err("add_n: no operands");
        };
        let n = self.len_of(*first);
        let mut out = vec![0.0; n];
        for p in parts {
            if self.len_of(*p) != n {
                return shape_err("add_n: operand lengths differ");
            }
            for (o, v) in out.iter_mut().zip(self.data(*p)) {
                *o += v;
            }
        }
        Ok(self.push(Tensor::vector(out), Op::AddN(parts.to_vec())))
    }

    /// `-ln softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let n = self.len_of(logits);
        if target >= n {
            return shape_err(format!(
                "cross_entropy: class {target} out of range for {n} logits"
            ));
        }
        let x = self.data(logits);
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = lse - x[target];
        let probs = softmax(x);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
        ))
    }

    /// One LSTM cell step. The returned node holds `[h; c]`; use
    /// [`Tape::slice`] to split it.
    pub fn lstm_cell(
        &mut self,
        x: Var,
        h: Var,
        c: Var,
        w_ih: Var,
        w_hh: Var,
        b: Var,
    ) -> Result<Var> {
        let hidden = self.len_of(h);
        let input = self.len_of(x);
        if self.len_of(c) != hidden
            || self.value(w_ih).shape() != [4 * hidden, input]
            || self.value(w_hh).shape() != [4 * hidden, hidden]
            || self.len_of(b) != 4 * hidden
        {
            return shape_err(format!(
                "lstm_cell: inconsistent shapes for input {input}, hidden {hidden}"
            ));
        }
        let weights = LstmWeights {
            input_size: input,
            hidden,
            w_ih: self.data(w_ih),
            w_hh: self.data(w_hh),
            bias: self.data(b),
        };
        let (h_new, c_new, cache) =
            lstm_forward(&weights, self.data(x), self.data(h), self.data(c));
        let mut out = h_new;
        out.extend(c_new);
        Ok(self.push(
            Tensor::vector(out),
            Op::Lstm {
                x,
                h,
                c,
                w_ih,
                w_hh,
                b,
                cache,
            },
        ))
    }

    /// Reverse pass from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.len_of(loss) != 1 {
            return shape_err(format!(
                "backward needs a scalar loss, got {} elements",
                self.len_of(loss)
            ));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(vec![1.0]);

        fn slot<'g>(grads: &'g mut [Option<Vec<f64>>], nodes: &[Node], v: Var) -> &'g mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; nodes[v.0].value.len()])
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let nodes = &self.nodes[..];
            match &node.op {
                Op::Leaf | Op::Param(_) => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Linear {
                    w,
                    x,
                    b,
                    rows,
                    cols,
                } => {
                    outer_acc(&g, nodes[x.0].value.data(), slot(&mut grads, nodes, *w));
                    matvec_t_acc(
                        nodes[w.0].value.data(),
                        *rows,
                        *cols,
                        &g,
                        slot(&mut grads, nodes, *x),
                    );
                    if let Some(b) = b {
                        add_into(slot(&mut grads, nodes, *b), &g);
                    }
                }
                Op::Add(a, b) => {
                    add_into(slot(&mut grads, nodes, *a), &g);
                    add_into(slot(&mut grads, nodes, *b), &g);
                }
                Op::Sub(a, b) => {
                    add_into(slot(&mut grads, nodes, *a), &g);
                    let gb = slot(&mut grads, nodes, *b);
                    for (o, v) in gb.iter_mut().zip(&g) {
                        *o -= v;
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), y) in ga.iter_mut().zip(&g).zip(vb) {
                        *o += gi * y;
                    }
                    let gb = slot(&mut grads, nodes, *b);
                    for ((o, gi), x) in gb.iter_mut().zip(&g).zip(va) {
                        *o += gi * x;
                    }
                }
                Op::Div(a, b) => {
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), y) in ga.iter_mut().zip(&g).zip(vb) {
                        *o += gi / y;
                    }
                    let gb = slot(&mut grads, nodes, *b);
                    for (((o, gi), x), y) in gb.iter_mut().zip(&g).zip(va).zip(vb) {
                        *o -= gi * x / (y * y);
                    }
                }
                Op::Scale(a, k) => {
                    let ga = slot(&mut grads, nodes, *a);
                    for (o, gi) in ga.iter_mut().zip(&g) {
                        *o += gi * k;
                    }
                }
                Op::AddConst(a) => add_into(slot(&mut grads, nodes, *a), &g),
                Op::AddScalar { v, s } => {
                    add_into(slot(&mut grads, nodes, *v), &g);
                    slot(&mut grads, nodes, *s)[0] += g.iter().sum::<f64>();
                }
                Op::Act(a, act) => {
                    let y = node.value.data();
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), yi) in ga.iter_mut().zip(&g).zip(y) {
                        *o += gi * act.derivative_from_output(*yi);
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.data();
                    let gy: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), yi) in ga.iter_mut().zip(&g).zip(y) {
                        *o += yi * (gi - gy);
                    }
                }
                Op::Sum(a) => {
                    let ga = slot(&mut grads, nodes, *a);
                    ga.iter_mut().for_each(|o| *o += g[0]);
                }
                Op::SumSquares(a) => {
                    let va = nodes[a.0].value.data();
                    let ga = slot(&mut grads, nodes, *a);
                    for (o, x) in ga.iter_mut().zip(va) {
                        *o += 2.0 * x * g[0];
                    }
                }
                Op::Dot(a, b) => {
                    let (va, vb) = (nodes[a.0].value.data(), nodes[b.0].value.data());
                    let ga = slot(&mut grads, nodes, *a);
                    for (o, y) in ga.iter_mut().zip(vb) {
                        *o += g[0] * y;
                    }
                    let gb = slot(&mut grads, nodes, *b);
                    for (o, x) in gb.iter_mut().zip(va) {
                        *o += g[0] * x;
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = nodes[p.0].value.len();
                        add_into(slot(&mut grads, nodes, *p), &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Slice { x, start } => {
                    let gx = slot(&mut grads, nodes, *x);
                    add_into(&mut gx[*start..*start + g.len()], &g);
                }
                Op::AddN(parts) => {
                    for p in parts {
                        add_into(slot(&mut grads, nodes, *p), &g);
                    }
                }
                Op::CrossEntropy {
                    logits,
                    target,
                    probs,
                } => {
                    let gl = slot(&mut grads, nodes, *logits);
                    for (k, (o, pk)) in gl.iter_mut().zip(probs).enumerate() {
                        let indicator = if k == *target { 1.0 } else { 0.0 };
                        *o += g[0] * (pk - indicator);
                    }
                }
                Op::Lstm {
                    x,
                    h,
                    c,
                    w_ih,
                    w_hh,
                    b,
                    cache,
                } => {
                    let hidden = nodes[h.0].value.len();
                    let weights = LstmWeights {
                        input_size: nodes[x.0].value.len(),
                        hidden,
                        w_ih: nodes[w_ih.0].value.data(),
                        w_hh: nodes[w_hh.0].value.data(),
                        bias: nodes[b.0].value.data(),
                    };
                    let step = lstm_backward(
                        &weights,
                        nodes[x.0].value.data(),
                        nodes[h.0].value.data(),
                        nodes[c.0].value.data(),
                        cache,
                        &g[..hidden],
                        &g[hidden..],
                    );
                    add_into(slot(&mut grads, nodes, *x), &step.dx);
                    add_into(slot(&mut grads, nodes, *h), &step.dh_prev);
                    add_into(slot(&mut grads, nodes, *c), &step.dc_prev);
                    add_into(slot(&mut grads, nodes, *w_ih), &step.dw_ih);
                    add_into(slot(&mut grads, nodes, *w_hh), &step.dw_hh);
                    add_into(slot(&mut grads, nodes, *b), &step.dbias);
                }
            }
        }
        Ok(Gradients { grads })
    }

    /// Adds gradients reaching parameter leaves into `store`.
    pub fn accumulate(&self, grads: &Gradients, store: &mut ParamStore) {
        for (i, node) in self.nodes.iter().enumerate() {
            if let (Op::Param(id), Some(g)) =
                (&node.op, grads.grads.get(i).and_then(|g| g.as_ref()))
            {
                add_into(store.get_mut(*id).grad.data_mut(), g);
            }
        }
    }

    /// Runs the reverse pass, accumulates parameter gradients into `store`
    /// and clears the tape.
    pub fn backward_into(&mut self, loss: Var, store: &mut ParamStore) -> Result<()> {
        let grads = self.backward(loss)?;
        self.accumulate(&grads, store);
        self.clear();
        Ok(())
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
