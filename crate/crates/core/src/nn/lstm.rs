//! LSTM cell with gate order (input, forget, cell, output).
//!
//! `z = W_ih x + W_hh h + b`, split into four `hidden`-wide chunks in that
//! order; `i, f, o` use the logistic sigmoid, the candidate uses `tanh`.
//! The forget-gate bias is initialised to 1.

use rand::Rng;

use crate::error::{shape_err, Result};
use crate::nn::init::{orthogonal, xavier_uniform};
use crate::nn::tape::sigmoid;
use crate::nn::tensor::{matvec, matvec_t_acc, outer_acc};
use crate::nn::Tensor;

/// Borrowed view of one cell's weights.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a> {
    pub input_size: usize,
    pub hidden: usize,
    /// `4h × n`, row-major.
    pub w_ih: &'a [f64],
    /// `4h × h`, row-major.
    pub w_hh: &'a [f64],
    /// `4h`.
    pub bias: &'a [f64],
}

/// Owned cell weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellParams {
    pub input_weights: Tensor,
    pub recurrent_weights: Tensor,
    pub bias: Tensor,
}

impl LstmCellParams {
    pub fn zeros(input_size: usize, hidden: usize) -> Self {
        Self {
            input_weights: Tensor::zeros(&[4 * hidden, input_size]),
            recurrent_weights: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    /// Xavier-uniform input weights, orthogonal recurrent weights, zero bias
    /// except the forget gate which starts at 1.
    pub fn init<R: Rng + ?Sized>(input_size: usize, hidden: usize, rng: &mut R) -> Self {
        let input_weights = xavier_uniform(4 * hidden, input_size, rng);
        let recurrent_weights = orthogonal(4 * hidden, hidden, rng);
        Self {
            input_weights,
            recurrent_weights,
            bias: forget_bias(hidden),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_weights.cols()
    }

    pub fn hidden(&self) -> usize {
        self.recurrent_weights.cols()
    }

    pub fn view(&self) -> LstmWeights<'_> {
        LstmWeights {
            input_size: self.input_size(),
            hidden: self.hidden(),
            w_ih: self.input_weights.data(),
            w_hh: self.recurrent_weights.data(),
            bias: self.bias.data(),
        }
    }
}

/// Bias vector with the forget-gate chunk set to 1.
pub fn forget_bias(hidden: usize) -> Tensor {
    let mut b = vec![0.0; 4 * hidden];
    b[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
    Tensor::vector(b)
}

/// Activated gates and `tanh(c')` kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LstmCache {
    pub gates: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

pub fn lstm_forward(
    w: &LstmWeights<'_>,
    x: &[f64],
    h: &[f64],
    c: &[f64],
) -> (Vec<f64>, Vec<f64>, LstmCache) {
    let hd = w.hidden;
    let mut z = vec![0.0; 4 * hd];
    matvec(w.w_ih, 4 * hd, w.input_size, x, Some(w.bias), &mut z);
    let mut rec = vec![0.0; 4 * hd];
    matvec(w.w_hh, 4 * hd, hd, h, None, &mut rec);
    for (zi, ri) in z.iter_mut().zip(&rec) {
        *zi += ri;
    }
    for (k, zk) in z.iter_mut().enumerate() {
        *zk = if (2 * hd..3 * hd).contains(&k) {
            zk.tanh()
        } else {
            sigmoid(*zk)
        };
    }
    let mut c_new = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    let mut h_new = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, g, o) = (z[k], z[hd + k], z[2 * hd + k], z[3 * hd + k]);
        c_new[k] = f * c[k] + i * g;
        tanh_c[k] = c_new[k].tanh();
        h_new[k] = o * tanh_c[k];
    }
    (h_new, c_new, LstmCache { gates: z, tanh_c })
}

/// Gradients of one cell step.
pub struct LstmStepGrads {
    pub dx: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
    pub dw_ih: Vec<f64>,
    pub dw_hh: Vec<f64>,
    pub dbias: Vec<f64>,
}

/// Pre-activation gradient `dz` of one step given upstream `dh` and `dc`.
/// Returns `(dz, dc_prev)`.
pub fn lstm_gate_grads(
    c_prev: &[f64],
    cache: &LstmCache,
    dh: &[f64],
    dc_next: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let hd = dh.len();
    let z = &cache.gates;
    let mut dz = vec![0.0; 4 * hd];
    let mut dc_prev = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, g, o) = (z[k], z[hd + k], z[2 * hd + k], z[3 * hd + k]);
        let tc = cache.tanh_c[k];
        let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
        let d_o = dh[k] * tc;
        let d_i = dc * g;
        let d_g = dc * i;
        let d_f = dc * c_prev[k];
        dc_prev[k] = dc * f;
        dz[k] = d_i * i * (1.0 - i);
        dz[hd + k] = d_f * f * (1.0 - f);
        dz[2 * hd + k] = d_g * (1.0 - g * g);
        dz[3 * hd + k] = d_o * o * (1.0 - o);
    }
    (dz, dc_prev)
}

pub fn lstm_backward(
    w: &LstmWeights<'_>,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    cache: &LstmCache,
    dh: &[f64],
    dc_next: &[f64],
) -> LstmStepGrads {
    let hd = w.hidden;
    let (dz, dc_prev) = lstm_gate_grads(c_prev, cache, dh, dc_next);
    let mut dx = vec![0.0; w.input_size];
    matvec_t_acc(w.w_ih, 4 * hd, w.input_size, &dz, &mut dx);
    let mut dh_prev = vec![0.0; hd];
    matvec_t_acc(w.w_hh, 4 * hd, hd, &dz, &mut dh_prev);
    let mut dw_ih = vec![0.0; 4 * hd * w.input_size];
    outer_acc(&dz, x, &mut dw_ih);
    let mut dw_hh = vec![0.0; 4 * hd * hd];
    outer_acc(&dz, h_prev, &mut dw_hh);
    LstmStepGrads {
        dx,
        dh_prev,
        dc_prev,
        dw_ih,
        dw_hh,
        dbias: dz,
    }
}

fn check(w: &LstmWeights<'_>, x: &[f64], h: &[f64], c: &[f64]) -> Result<()> {
    let hd = w.hidden;
    if w.w_ih.len() != 4 * hd * w.input_size
        || w.w_hh.len() != 4 * hd * hd
        || w.bias.len() != 4 * hd
        || x.len() != w.input_size
        || h.len() != hd
        || c.len() != hd
    {
        return shape_err(format!(
            "lstm_step: inconsistent shapes (input {}, hidden {hd}, x {}, h {}, c {})",
            w.input_size,
            x.len(),
            h.len(),
            c.len()
        ));
    }
    Ok(())
}

/// One cell step returning `(h, c)`.
pub fn lstm_step(
    w: &LstmWeights<'_>,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check(w, x, h_prev, c_prev)?;
    let (h, c, _) = lstm_forward(w, x, h_prev, c_prev);
    Ok((h, c))
}

/// Runs the cell over the rows of `xs` from zero state; returns the hidden
/// state after every step as a `T × h` tensor.
pub fn lstm_sequence(w: &LstmWeights<'_>, xs: &Tensor) -> Result<Tensor> {
    let t_len = xs.rows();
    let mut h = vec![0.0; w.hidden];
    let mut c = vec![0.0; w.hidden];
    let mut out = Vec::with_capacity(t_len * w.hidden);
    for t in 0..t_len {
        let (hn, cn) = lstm_step(w, xs.row(t), &h, &c)?;
        out.extend_from_slice(&hn);
        h = hn;
        c = cn;
    }
    Tensor::matrix(t_len, w.hidden, out)
}
