//! Next-step regression loss of the encoder and its gradients.
//!
//! For component `j` the smooth loss is
//! `Σ_{t<T-1} ‖X_{t+1}[jE..(j+1)E] − head_j(h^{(j)}_t)‖² + r·(‖W_ih‖² + ‖W_hh‖² + ‖W_head‖²)`.
//! The encoder loss is the sum over components.

use crate::error::{shape_err, Result};
use crate::gc::encoder::{ClstmEncoder, ComponentParams, EncodedVars};
use crate::nn::{Tape, Tensor, Var};

/// Gradients of one component's smooth loss, flattened like the
/// corresponding parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentGrads {
    pub w_ih: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub bias: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

pub(crate) fn check_series(x: &Tensor, input_size: usize) -> Result<()> {
    if x.shape().len() != 2 || x.cols() != input_size {
        return shape_err(format!(
            "var loss: input {:?}, expected {input_size} columns",
            x.shape()
        ));
    }
    if x.rows() < 2 {
        return shape_err(format!("var loss needs T >= 2, got {}", x.rows()));
    }
    Ok(())
}

fn ridge_term(params: &ComponentParams, ridge: f64) -> f64 {
    ridge
        * (params.cell.input_weights.squared_norm()
            + params.cell.recurrent_weights.squared_norm()
            + params.head_w.squared_norm())
}

/// Reusable buffers for one component's forward and backward passes.
/// `forward` keeps the activations that `backward` consumes.
#[derive(Clone, Debug, Default)]
pub struct VarWorkspace {
    steps: usize,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    hs: Vec<f64>,
    cs: Vec<f64>,
    errs: Vec<f64>,
    z: Vec<f64>,
    dh: Vec<f64>,
    dh_next: Vec<f64>,
    dc_next: Vec<f64>,
    dz: Vec<f64>,
}

fn sigmoid(v: f64) -> f64 {
    crate::nn::tape::sigmoid(v)
}

impl VarWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sum of squared next-step errors of component `j` (no ridge).
    pub fn forward(&mut self, params: &ComponentParams, x: &Tensor, j: usize) -> f64 {
        let w = params.cell_view();
        let (n, hd, e) = (w.input_size, w.hidden, params.head_w.rows());
        let steps = x.rows() - 1;
        self.steps = steps;
        self.gates.resize(steps * 4 * hd, 0.0);
        self.tanh_c.resize(steps * hd, 0.0);
        self.hs.clear();
        self.hs.resize((steps + 1) * hd, 0.0);
        self.cs.clear();
        self.cs.resize((steps + 1) * hd, 0.0);
        self.errs.resize(steps * e, 0.0);
        self.z.resize(4 * hd, 0.0);
        let (w_ih, w_hh, bias) = (w.w_ih, w.w_hh, w.bias);
        let (head_w, head_b) = (params.head_w.data(), params.head_b.data());
        let mut loss = 0.0;
        for t in 0..steps {
            let xt = x.row(t);
            let (h_prev, rest) = self.hs.split_at_mut((t + 1) * hd);
            let h_prev = &h_prev[t * hd..];
            let h_new = &mut rest[..hd];
            for (r, zr) in self.z.iter_mut().enumerate() {
                let mut acc = bias[r];
                for (a, b) in w_ih[r * n..(r + 1) * n].iter().zip(xt) {
                    acc += a * b;
                }
                for (a, b) in w_hh[r * hd..(r + 1) * hd].iter().zip(h_prev) {
                    acc += a * b;
                }
                *zr = acc;
            }
            let gates = &mut self.gates[t * 4 * hd..(t + 1) * 4 * hd];
            for (k, g) in gates.iter_mut().enumerate() {
                let v = self.z[k];
                *g = if (2 * hd..3 * hd).contains(&k) {
                    v.tanh()
                } else {
                    sigmoid(v)
                };
            }
            let (c_prev, c_rest) = self.cs.split_at_mut((t + 1) * hd);
            let c_prev = &c_prev[t * hd..];
            let c_new = &mut c_rest[..hd];
            let tanh_c = &mut self.tanh_c[t * hd..(t + 1) * hd];
            for k in 0..hd {
                let (i, f, g, o) = (
                    gates[k],
                    gates[hd + k],
                    gates[2 * hd + k],
                    gates[3 * hd + k],
                );
                c_new[k] = f * c_prev[k] + i * g;
                tanh_c[k] = c_new[k].tanh();
                h_new[k] = o * tanh_c[k];
            }
            let target = &x.row(t + 1)[j * e..(j + 1) * e];
            let errs = &mut self.errs[t * e..(t + 1) * e];
            for r in 0..e {
                let mut pred = head_b[r];
                for (a, b) in head_w[r * hd..(r + 1) * hd].iter().zip(h_new.iter()) {
                    pred += a * b;
                }
                errs[r] = pred - target[r];
                loss += errs[r] * errs[r];
            }
        }
        loss
    }

    /// Gradient of the last [`forward`](Self::forward)'s loss plus ridge,
    /// written into `g`.
    pub fn backward(
        &mut self,
        params: &ComponentParams,
        x: &Tensor,
        ridge: f64,
        g: &mut ComponentGrads,
    ) {
        let w = params.cell_view();
        let (n, hd, e) = (w.input_size, w.hidden, params.head_w.rows());
        for buf in [
            &mut g.w_ih,
            &mut g.w_hh,
            &mut g.bias,
            &mut g.head_w,
            &mut g.head_b,
        ] {
            buf.iter_mut().for_each(|v| *v = 0.0);
        }
        g.w_ih.resize(4 * hd * n, 0.0);
        g.w_hh.resize(4 * hd * hd, 0.0);
        g.bias.resize(4 * hd, 0.0);
        g.head_w.resize(e * hd, 0.0);
        g.head_b.resize(e, 0.0);
        for buf in [&mut self.dh, &mut self.dh_next, &mut self.dc_next] {
            buf.clear();
            buf.resize(hd, 0.0);
        }
        self.dz.resize(4 * hd, 0.0);
        let head_w = params.head_w.data();
        for t in (0..self.steps).rev() {
            let h_t = &self.hs[(t + 1) * hd..(t + 2) * hd];
            let h_prev = &self.hs[t * hd..(t + 1) * hd];
            let c_prev = &self.cs[t * hd..(t + 1) * hd];
            let gates = &self.gates[t * 4 * hd..(t + 1) * 4 * hd];
            let tanh_c = &self.tanh_c[t * hd..(t + 1) * hd];
            self.dh.copy_from_slice(&self.dh_next);
            for r in 0..e {
                let d = 2.0 * self.errs[t * e + r];
                g.head_b[r] += d;
                for k in 0..hd {
                    g.head_w[r * hd + k] += d * h_t[k];
                    self.dh[k] += d * head_w[r * hd + k];
                }
            }
            for k in 0..hd {
                let (i, f, gg, o) = (
                    gates[k],
                    gates[hd + k],
                    gates[2 * hd + k],
                    gates[3 * hd + k],
                );
                let tc = tanh_c[k];
                let dc = self.dc_next[k] + self.dh[k] * o * (1.0 - tc * tc);
                self.dc_next[k] = dc * f;
                self.dz[k] = dc * gg * i * (1.0 - i);
                self.dz[hd + k] = dc * c_prev[k] * f * (1.0 - f);
                self.dz[2 * hd + k] = dc * i * (1.0 - gg * gg);
                self.dz[3 * hd + k] = self.dh[k] * tc * o * (1.0 - o);
            }
            let xt = x.row(t);
            self.dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &dzr) in self.dz.iter().enumerate() {
                g.bias[r] += dzr;
                if dzr == 0.0 {
                    continue;
                }
                for (gw, xv) in g.w_ih[r * n..(r + 1) * n].iter_mut().zip(xt) {
                    *gw += dzr * xv;
                }
                let row = &w.w_hh[r * hd..(r + 1) * hd];
                for k in 0..hd {
                    g.w_hh[r * hd + k] += dzr * h_prev[k];
                    self.dh_next[k] += dzr * row[k];
                }
            }
        }
        let add_ridge = |grad: &mut [f64], value: &Tensor| {
            for (gv, v) in grad.iter_mut().zip(value.data()) {
                *gv += 2.0 * ridge * v;
            }
        };
        add_ridge(&mut g.w_ih, &params.cell.input_weights);
        add_ridge(&mut g.w_hh, &params.cell.recurrent_weights);
        add_ridge(&mut g.head_w, &params.head_w);
    }
}

impl ComponentGrads {
    pub fn zeros() -> Self {
        Self {
            w_ih: Vec::new(),
            w_hh: Vec::new(),
            bias: Vec::new(),
            head_w: Vec::new(),
            head_b: Vec::new(),
        }
    }
}

/// Ridge part of one component's smooth loss.
pub fn ridge_penalty(params: &ComponentParams, ridge: f64) -> f64 {
    ridge_term(params, ridge)
}

/// Smooth loss of component `j` on the stacked series `x`.
pub fn component_loss(params: &ComponentParams, x: &Tensor, j: usize, ridge: f64) -> Result<f64> {
    check_series(x, params.cell.input_size())?;
    Ok(VarWorkspace::new().forward(params, x, j) + ridge_term(params, ridge))
}

/// Smooth loss of component `j` and its gradient by backpropagation
/// through time.
pub fn component_loss_and_grad(
    params: &ComponentParams,
    x: &Tensor,
    j: usize,
    ridge: f64,
) -> Result<(f64, ComponentGrads)> {
    check_series(x, params.cell.input_size())?;
    let mut ws = VarWorkspace::new();
    let loss = ws.forward(params, x, j);
    let mut g = ComponentGrads::zeros();
    ws.backward(params, x, ridge, &mut g);
    Ok((loss + ridge_term(params, ridge), g))
}

/// Smooth VAR loss of the whole encoder (group penalty excluded).
pub fn var_loss(
    encoder: &ClstmEncoder,
    store: &crate::nn::ParamStore,
    x: &Tensor,
    ridge: f64,
) -> Result<f64> {
    check_series(x, encoder.input_size())?;
    (0..encoder.p)
        .map(|j| component_loss(&encoder.component(store, j), x, j, ridge))
        .sum()
}

/// Differentiable VAR loss over an encoding produced by
/// [`encode_on_tape`](crate::gc::encoder::encode_on_tape). `targets` is the
/// stacked input; it is treated as a constant.
pub fn var_loss_on_tape(
    encoder: &ClstmEncoder,
    tape: &mut Tape,
    encoded: &EncodedVars,
    targets: &Tensor,
    ridge: f64,
) -> Result<Var> {
    check_series(targets, encoder.input_size())?;
    let e = encoder.embed;
    let mut terms = Vec::new();
    for (j, vars) in encoded.params.iter().enumerate() {
        for t in 0..targets.rows() - 1 {
            let pred = tape.linear(vars.head_w, encoded.hidden[j][t], Some(vars.head_b))?;
            let target = tape.constant_vec(targets.row(t + 1)[j * e..(j + 1) * e].to_vec());
            let diff = tape.sub(pred, target)?;
            terms.push(tape.sum_squares(diff));
        }
        if ridge > 0.0 {
            for w in [vars.w_ih, vars.w_hh, vars.head_w] {
                let sq = tape.sum_squares(w);
                terms.push(tape.scale(sq, ridge));
            }
        }
    }
    tape.add_n(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gc::encoder::encode_on_tape;
    use crate::nn::ParamStore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    #[test]
    fn untrained_heads_on_zero_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let enc = ClstmEncoder::new(&mut store, "enc", 2, 2, 3, &mut rng).unwrap();
        let x = random(6, 4, &mut rng);
        let ridge = 1e-4;
        let ridge_total: f64 = enc
            .ridge_ids()
            .map(|id| store.value(id).squared_norm())
            .sum::<f64>()
            * ridge;
        let expected: f64 = (1..6)
            .map(|t| x.row(t).iter().map(|v| v * v).sum::<f64>())
            .sum();
        let loss = var_loss(&enc, &store, &x, ridge).unwrap();
        assert!((loss - expected - ridge_total).abs() < 1e-12);
        assert!(var_loss(&enc, &store, &random(1, 4, &mut rng), ridge).is_err());
    }

    #[test]
    fn hand_gradients_match_tape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let enc = ClstmEncoder::new(&mut store, "enc", 3, 2, 3, &mut rng).unwrap();
        for ids in &enc.components {
            for id in [ids.head_w, ids.head_b] {
                store
                    .value_mut(id)
                    .data_mut()
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-0.5..0.5));
            }
        }
        let x = random(7, 6, &mut rng);
        let ridge = 0.01;
        let mut tape = Tape::new();
        let rows: Vec<Var> = (0..7)
            .map(|t| tape.constant_vec(x.row(t).to_vec()))
            .collect();
        let encoded = encode_on_tape(&enc, &mut tape, &store, &rows).unwrap();
        let loss = var_loss_on_tape(&enc, &mut tape, &encoded, &x, ridge).unwrap();
        let tape_loss = tape.scalar(loss);
        tape.backward_into(loss, &mut store).unwrap();
        let mut hand_total = 0.0;
        for j in 0..3 {
            let (l, g) = component_loss_and_grad(&enc.component(&store, j), &x, j, ridge).unwrap();
            hand_total += l;
            let ids = &enc.components[j];
            for (id, hand) in [
                (ids.w_ih, &g.w_ih),
                (ids.w_hh, &g.w_hh),
                (ids.bias, &g.bias),
                (ids.head_w, &g.head_w),
                (ids.head_b, &g.head_b),
            ] {
                for (a, b) in store.grad(id).data().iter().zip(hand.iter()) {
                    assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
                }
            }
        }
        assert!((tape_loss - hand_total).abs() < 1e-10);
    }
}
