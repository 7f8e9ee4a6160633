//! Component-wise LSTM encoder.
//!
//! Component `j` is an LSTM over the full stacked input `X_t ∈ R^{p·E}`
//! plus a linear head `h → E` that predicts block `j` of `X_{t+1}`.
//! Columns `[kE, (k+1)E)` of component `j`'s input weights read series
//! `k`; their norm is the causal strength of `k` on `j`.

use rand::Rng;

use crate::error::{shape_err, Result};
use crate::nn::lstm::lstm_forward;
use crate::nn::tape::softmax;
use crate::nn::{Dense, LstmCellParams, LstmWeights, ParamId, ParamStore, Tape, Tensor, Var};

/// Parameter handles of one component.
#[derive(Clone, Debug)]
pub struct ComponentIds {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub head_w: ParamId,
    pub head_b: ParamId,
}

/// Owned copy of one component's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentParams {
    pub cell: LstmCellParams,
    /// `E × h`.
    pub head_w: Tensor,
    /// `E`.
    pub head_b: Tensor,
}

impl ComponentParams {
    pub fn cell_view(&self) -> LstmWeights<'_> {
        self.cell.view()
    }

    /// Frobenius norm of input-weight column block `k` of width `embed`.
    pub fn block_norm(&self, k: usize, embed: usize) -> f64 {
        let w = &self.cell.input_weights;
        let mut s = 0.0;
        for r in 0..w.rows() {
            for v in &w.row(r)[k * embed..(k + 1) * embed] {
                s += v * v;
            }
        }
        s.sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct ClstmEncoder {
    pub p: usize,
    pub embed: usize,
    pub hidden: usize,
    pub components: Vec<ComponentIds>,
}

impl ClstmEncoder {
    /// Registers `p` components named `{prefix}.{j}.*`; heads start at zero.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        p: usize,
        embed: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if p == 0 || embed == 0 || hidden == 0 {
            return shape_err(format!(
                "encoder dims must be positive (p={p}, E={embed}, h={hidden})"
            ));
        }
        let components = (0..p)
            .map(|j| {
                let cell = LstmCellParams::init(p * embed, hidden, rng);
                Ok(ComponentIds {
                    w_ih: store.add(format!("{prefix}.{j}.w_ih"), cell.input_weights)?,
                    w_hh: store.add(format!("{prefix}.{j}.w_hh"), cell.recurrent_weights)?,
                    bias: store.add(format!("{prefix}.{j}.bias"), cell.bias)?,
                    head_w: store.add(
                        format!("{prefix}.{j}.head.weight"),
                        Tensor::zeros(&[embed, hidden]),
                    )?,
                    head_b: store
                        .add(format!("{prefix}.{j}.head.bias"), Tensor::zeros(&[embed]))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            p,
            embed,
            hidden,
            components,
        })
    }

    pub fn input_size(&self) -> usize {
        self.p * self.embed
    }

    pub fn output_size(&self) -> usize {
        self.p * self.hidden
    }

    pub fn weights<'a>(&self, store: &'a ParamStore, j: usize) -> LstmWeights<'a> {
        let ids = &self.components[j];
        LstmWeights {
            input_size: self.input_size(),
            hidden: self.hidden,
            w_ih: store.value(ids.w_ih).data(),
            w_hh: store.value(ids.w_hh).data(),
            bias: store.value(ids.bias).data(),
        }
    }

    pub fn component(&self, store: &ParamStore, j: usize) -> ComponentParams {
        let ids = &self.components[j];
        ComponentParams {
            cell: LstmCellParams {
                input_weights: store.value(ids.w_ih).clone(),
                recurrent_weights: store.value(ids.w_hh).clone(),
                bias: store.value(ids.bias).clone(),
            },
            head_w: store.value(ids.head_w).clone(),
            head_b: store.value(ids.head_b).clone(),
        }
    }

    pub fn set_component(&self, store: &mut ParamStore, j: usize, params: ComponentParams) {
        let ids = &self.components[j];
        *store.value_mut(ids.w_ih) = params.cell.input_weights;
        *store.value_mut(ids.w_hh) = params.cell.recurrent_weights;
        *store.value_mut(ids.bias) = params.cell.bias;
        *store.value_mut(ids.head_w) = params.head_w;
        *store.value_mut(ids.head_b) = params.head_b;
    }

    /// Input-weight parameters, one per component.
    pub fn input_weight_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.components.iter().map(|c| c.w_ih)
    }

    /// Weight matrices subject to the ridge penalty.
    pub fn ridge_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.components
            .iter()
            .flat_map(|c| [c.w_ih, c.w_hh, c.head_w])
    }

    /// `strengths[j][k]` = norm of block `k` in component `j`.
    pub fn block_norms(&self, store: &ParamStore) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|j| {
                let comp = self.component(store, j);
                (0..self.p)
                    .map(|k| comp.block_norm(k, self.embed))
                    .collect()
            })
            .collect()
    }

    /// Sets block `k` of component `j` to zero.
    pub fn zero_block(&self, store: &mut ParamStore, j: usize, k: usize) {
        let (n, e) = (self.input_size(), self.embed);
        let w = store.value_mut(self.components[j].w_ih);
        for row in w.data_mut().chunks_mut(n) {
            row[k * e..(k + 1) * e].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Resets every component to freshly drawn LSTM weights and zero heads.
    pub fn reinit<R: Rng + ?Sized>(&self, store: &mut ParamStore, rng: &mut R) {
        for j in 0..self.p {
            let cell = LstmCellParams::init(self.input_size(), self.hidden, rng);
            self.set_component(
                store,
                j,
                ComponentParams {
                    cell,
                    head_w: Tensor::zeros(&[self.embed, self.hidden]),
                    head_b: Tensor::zeros(&[self.embed]),
                },
            );
        }
    }
}

/// Per-timestep softmax of `φ(f_t)`: a `T × E` matrix with rows on the
/// simplex.
pub fn pi_transform(values: &Tensor, phi: &Dense, store: &ParamStore) -> Result<Tensor> {
    if values.cols() != phi.in_dim {
        return shape_err(format!(
            "pi_transform: features {} wide, map expects {}",
            values.cols(),
            phi.in_dim
        ));
    }
    let mut out = Vec::with_capacity(values.rows() * phi.out_dim);
    for t in 0..values.rows() {
        out.extend(softmax(&phi.apply(store, values.row(t))));
    }
    Tensor::matrix(values.rows(), phi.out_dim, out)
}

/// Concatenates `p` `T × E` matrices per timestep into `T × (p·E)`.
pub fn stack_rows(parts: &[Tensor]) -> Result<Tensor> {
    let Some(first) = parts.first() else {
        return shape_err("stack_rows: no inputs");
    };
    let (t_len, e) = (first.rows(), first.cols());
    if parts.iter().any(|x| x.rows() != t_len || x.cols() != e) {
        return shape_err("stack_rows: inputs must share T and E");
    }
    let mut out = Vec::with_capacity(t_len * e * parts.len());
    for t in 0..t_len {
        for x in parts {
            out.extend_from_slice(x.row(t));
        }
    }
    Tensor::matrix(t_len, e * parts.len(), out)
}

/// Inverse of [`stack_rows`].
pub fn unstack_rows(x: &Tensor, p: usize) -> Result<Vec<Tensor>> {
    if p == 0 || x.cols() % p != 0 {
        return shape_err(format!(
            "unstack_rows: {} columns not divisible by {p}",
            x.cols()
        ));
    }
    let e = x.cols() / p;
    (0..p)
        .map(|k| {
            let data = (0..x.rows())
                .flat_map(|t| x.row(t)[k * e..(k + 1) * e].to_vec())
                .collect();
            Tensor::matrix(x.rows(), e, data)
        })
        .collect()
}

/// Hidden states of component `j` over the rows of `x` (`T × h`).
pub fn encode_component(w: &LstmWeights<'_>, x: &Tensor) -> Tensor {
    let hd = w.hidden;
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut out = Vec::with_capacity(x.rows() * hd);
    for t in 0..x.rows() {
        let (hn, cn, _) = lstm_forward(w, x.row(t), &h, &c);
        out.extend_from_slice(&hn);
        h = hn;
        c = cn;
    }
    Tensor::matrix(x.rows(), hd, out).expect("shape")
}

/// `h_enc`: per-timestep concatenation of the `p` hidden states.
pub fn encode(encoder: &ClstmEncoder, store: &ParamStore, x: &Tensor) -> Result<Tensor> {
    if x.shape().len() != 2 || x.cols() != encoder.input_size() {
        return shape_err(format!(
            "encode: input {:?}, encoder expects {} columns",
            x.shape(),
            encoder.input_size()
        ));
    }
    let parts: Vec<Tensor> = (0..encoder.p)
        .map(|j| encode_component(&encoder.weights(store, j), x))
        .collect();
    let hd = encoder.hidden;
    let mut out = Vec::with_capacity(x.rows() * encoder.output_size());
    for t in 0..x.rows() {
        for part in &parts {
            out.extend_from_slice(&part.row(t)[..hd]);
        }
    }
    Tensor::matrix(x.rows(), encoder.output_size(), out)
}

/// Tape leaves of one component.
#[derive(Clone, Copy, Debug)]
pub struct ComponentVars {
    pub w_ih: Var,
    pub w_hh: Var,
    pub bias: Var,
    pub head_w: Var,
    pub head_b: Var,
}

/// Differentiable encoding.
#[derive(Clone, Debug)]
pub struct EncodedVars {
    pub params: Vec<ComponentVars>,
    /// `hidden[j][t]`.
    pub hidden: Vec<Vec<Var>>,
    /// `h_enc` row per timestep.
    pub rows: Vec<Var>,
}

pub fn encode_on_tape(
    encoder: &ClstmEncoder,
    tape: &mut Tape,
    store: &ParamStore,
    x_rows: &[Var],
) -> Result<EncodedVars> {
    let hd = encoder.hidden;
    let mut params = Vec::with_capacity(encoder.p);
    let mut hidden = Vec::with_capacity(encoder.p);
    for ids in &encoder.components {
        let vars = ComponentVars {
            w_ih: tape.param(store, ids.w_ih),
            w_hh: tape.param(store, ids.w_hh),
            bias: tape.param(store, ids.bias),
            head_w: tape.param(store, ids.head_w),
            head_b: tape.param(store, ids.head_b),
        };
        let mut h = tape.constant_vec(vec![0.0; hd]);
        let mut c = tape.constant_vec(vec![0.0; hd]);
        let mut hs = Vec::with_capacity(x_rows.len());
        for &x in x_rows {
            let hc = tape.lstm_cell(x, h, c, vars.w_ih, vars.w_hh, vars.bias)?;
            h = tape.slice(hc, 0, hd)?;
            c = tape.slice(hc, hd, hd)?;
            hs.push(h);
        }
        params.push(vars);
        hidden.push(hs);
    }
    let rows = (0..x_rows.len())
        .map(|t| {
            let parts: Vec<Var> = hidden.iter().map(|hs| hs[t]).collect();
            tape.concat(&parts)
        })
        .collect();
    Ok(EncodedVars {
        params,
        hidden,
        rows,
    })
}
