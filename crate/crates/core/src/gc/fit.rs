//! Proximal gradient training of the encoder on its VAR objective.
//!
//! Each iteration takes a gradient step on the smooth loss, applies the
//! group-lasso prox with the same step, and backtracks until
//! `F(W⁺) ≤ F(W) − (c/t)‖W⁺ − W‖²` where `F` is smooth loss plus penalty.
//! The objective separates over components, so each component is fitted
//! on its own with its own step size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gc::encoder::{ClstmEncoder, ComponentParams};
use crate::gc::prox::{group_penalty, prox_blocks};
use crate::gc::var::{check_series, ridge_penalty, ComponentGrads, VarWorkspace};
use crate::gc::GCMatrix;
use crate::nn::{ParamStore, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VarTrainConfig {
    /// Group-lasso weight λ.
    pub lambda_group: f64,
    /// Ridge weight r on weight matrices.
    pub ridge: f64,
    /// Base λ scale l; grids of λ are multiples of it.
    pub nonsmooth_param: f64,
    /// Largest step tried by the line search.
    pub lr_var: f64,
    pub max_iters: usize,
    pub armijo_beta: f64,
    pub armijo_c: f64,
    /// Relative objective change, over `patience` iterations, that stops
    /// training.
    pub tol: f64,
    pub patience: usize,
}

impl Default for VarTrainConfig {
    fn default() -> Self {
        Self {
            lambda_group: 1e-3,
            ridge: 1e-4,
            nonsmooth_param: 1e-3,
            lr_var: 1e-2,
            max_iters: 1000,
            armijo_beta: 0.5,
            armijo_c: 1e-4,
            tol: 1e-6,
            patience: 10,
        }
    }
}

impl VarTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.lambda_group >= 0.0) || !(self.ridge >= 0.0) {
            return bad("lambda_group and ridge must be >= 0");
        }
        if !(self.lr_var > 0.0) || !self.lr_var.is_finite() {
            return bad("lr_var must be > 0");
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0)
            || !(self.armijo_c > 0.0 && self.armijo_c < 1.0)
        {
            return bad("armijo_beta and armijo_c must lie in (0, 1)");
        }
        if !(self.nonsmooth_param > 0.0) || !(self.tol >= 0.0) || self.patience == 0 {
            return bad("nonsmooth_param must be > 0, tol >= 0 and patience >= 1");
        }
        Ok(())
    }

    /// `n` values of λ spaced log-uniformly over `[lo·l, hi·l]`.
    pub fn lambda_grid(&self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let l = self.nonsmooth_param;
        if n == 1 {
            return vec![lo * l];
        }
        let (a, b) = ((lo * l).ln(), (hi * l).ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

/// Outcome of [`fit_var`].
#[derive(Clone, Debug, PartialEq)]
pub struct VarFit {
    /// Total objective after each iteration; components that stopped
    /// early contribute their final value.
    pub trace: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
}

impl VarFit {
    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().copied()
    }
}

struct ComponentFit {
    params: ComponentParams,
    trace: Vec<f64>,
    converged: bool,
}

fn squared_diff(a: &ComponentParams, b: &ComponentParams) -> f64 {
    let pairs = [
        (&a.cell.input_weights, &b.cell.input_weights),
        (&a.cell.recurrent_weights, &b.cell.recurrent_weights),
        (&a.cell.bias, &b.cell.bias),
        (&a.head_w, &b.head_w),
        (&a.head_b, &b.head_b),
    ];
    pairs
        .iter()
        .map(|(x, y)| {
            x.data()
                .iter()
                .zip(y.data())
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
        })
        .sum()
}

fn descend(value: &Tensor, grad: &[f64], step: f64) -> Tensor {
    let data = value
        .data()
        .iter()
        .zip(grad)
        .map(|(v, g)| v - step * g)
        .collect();
    Tensor::new(value.shape().to_vec(), data).expect("same shape")
}

fn proximal_step(
    params: &ComponentParams,
    grads: &ComponentGrads,
    step: f64,
    lambda: f64,
    embed: usize,
) -> ComponentParams {
    let mut next = ComponentParams {
        cell: crate::nn::LstmCellParams {
            input_weights: descend(&params.cell.input_weights, &grads.w_ih, step),
            recurrent_weights: descend(&params.cell.recurrent_weights, &grads.w_hh, step),
            bias: descend(&params.cell.bias, &grads.bias, step),
        },
        head_w: descend(&params.head_w, &grads.head_w, step),
        head_b: descend(&params.head_b, &grads.head_b, step),
    };
    prox_blocks(&mut next.cell.input_weights, embed, step * lambda);
    next
}

/// Smallest trial step before the line search gives up.
const MIN_STEP: f64 = 1e-20;

fn fit_component(
    mut params: ComponentParams,
    x: &Tensor,
    j: usize,
    embed: usize,
    cfg: &VarTrainConfig,
) -> Result<ComponentFit> {
    check_series(x, params.cell.input_size())?;
    let objective_of = |ws: &mut VarWorkspace, p: &ComponentParams| {
        ws.forward(p, x, j)
            + ridge_penalty(p, cfg.ridge)
            + cfg.lambda_group * group_penalty(&p.cell.input_weights, embed)
    };
    let mut ws = VarWorkspace::new();
    let mut grads = ComponentGrads::zeros();
    let mut objective = objective_of(&mut ws, &params);
    if !objective.is_finite() {
        return Err(Error::Divergence(format!(
            "component {j}: non-finite initial VAR objective"
        )));
    }
    ws.backward(&params, x, cfg.ridge, &mut grads);
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut step = cfg.lr_var;
    let mut converged = false;
    let mut history = vec![objective];
    for _ in 0..cfg.max_iters {
        let mut t = (step / cfg.armijo_beta).min(cfg.lr_var);
        let accepted = loop {
            let trial = proximal_step(&params, &grads, t, cfg.lambda_group, embed);
            let f_new = objective_of(&mut ws, &trial);
            if f_new.is_finite()
                && f_new <= objective - cfg.armijo_c / t * squared_diff(&trial, &params)
            {
                break Some((trial, f_new));
            }
            t *= cfg.armijo_beta;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((trial, f_new)) = accepted else {
            converged = true;
            break;
        };
        params = trial;
        ws.backward(&params, x, cfg.ridge, &mut grads);
        objective = f_new;
        step = t;
        trace.push(objective);
        history.push(objective);
        if history.len() > cfg.patience {
            let past = history[history.len() - 1 - cfg.patience];
            if (past - objective).abs() <= cfg.tol * objective.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    Ok(ComponentFit {
        params,
        trace,
        converged,
    })
}

/// Fits every component of `encoder` to the stacked series `x`
/// (`T × p·E`). On error the store keeps its previous values.
pub fn fit_var(
    encoder: &ClstmEncoder,
    store: &mut ParamStore,
    x: &Tensor,
    cfg: &VarTrainConfig,
) -> Result<VarFit> {
    cfg.validate()?;
    let start: Vec<ComponentParams> = (0..encoder.p)
        .map(|j| encoder.component(store, j))
        .collect();
    let fits = start
        .into_par_iter()
        .enumerate()
        .map(|(j, params)| fit_component(params, x, j, encoder.embed, cfg))
        .collect::<Result<Vec<_>>>()?;
    let len = fits.iter().map(|f| f.trace.len()).max().unwrap_or(0);
    let mut trace = vec![0.0; len];
    for f in &fits {
        for (i, slot) in trace.iter_mut().enumerate() {
            *slot += f.trace.get(i).or(f.trace.last()).copied().unwrap_or(0.0);
        }
    }
    let iterations = fits.iter().map(|f| f.trace.len()).collect();
    let converged = fits.iter().map(|f| f.converged).collect();
    for (j, f) in fits.into_iter().enumerate() {
        encoder.set_component(store, j, f.params);
    }
    Ok(VarFit {
        trace,
        iterations,
        converged,
    })
}

/// Causal strengths from input-weight block norms, thresholded at
/// `epsilon`.
pub fn extract_gc(encoder: &ClstmEncoder, store: &ParamStore, epsilon: f64) -> Result<GCMatrix> {
    GCMatrix::from_strengths(encoder.block_norms(store), epsilon)
}

/// One fitted point of a regularisation path.
#[derive(Clone, Debug)]
pub struct PathPoint {
    pub lambda: f64,
    pub gc: GCMatrix,
    pub fit: VarFit,
    /// Store values right after this fit.
    pub snapshot: Vec<Tensor>,
}

/// Fits `lambdas` in increasing order, each warm-started from the previous
/// solution. The store ends at the largest λ.
pub fn fit_path(
    encoder: &ClstmEncoder,
    store: &mut ParamStore,
    x: &Tensor,
    cfg: &VarTrainConfig,
    lambdas: &[f64],
    epsilon: f64,
) -> Result<Vec<PathPoint>> {
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .map(|lambda| {
            let cfg = VarTrainConfig {
                lambda_group: lambda,
                ..cfg.clone()
            };
            let fit = fit_var(encoder, store, x, &cfg)?;
            let gc = extract_gc(encoder, store, epsilon)?;
            Ok(PathPoint {
                lambda,
                gc,
                fit,
                snapshot: store.snapshot(),
            })
        })
        .collect()
}

/// Centres every column and scales it to unit population variance;
/// constant columns are only centred.
pub fn standardize(x: &Tensor) -> Tensor {
    let (t, n) = (x.rows(), x.cols());
    let mut out = x.clone();
    for c in 0..n {
        let mean = (0..t).map(|r| x.at(r, c)).sum::<f64>() / t as f64;
        let sd = ((0..t).map(|r| (x.at(r, c) - mean).powi(2)).sum::<f64>() / t as f64).sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        for r in 0..t {
            out.row_mut(r)[c] = (x.at(r, c) - mean) / scale;
        }
    }
    out
}
