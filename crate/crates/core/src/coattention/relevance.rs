//! Reductions of a `T × T` attention matrix to one weight per timestep.

use std::sync::OnceLock;

use crate::error::Result;
use crate::nn::{Tape, Tensor, Var};
use crate::registry::Registry;

pub trait RelevanceReduction: Send + Sync {
    fn name(&self) -> &'static str;

    /// Nonnegative `T`-vector summing to 1.
    fn reduce(&self, alpha: &Tensor) -> Vec<f64>;

    /// Differentiable version over the rows of `α`.
    fn reduce_on_tape(&self, tape: &mut Tape, alpha_rows: &[Var]) -> Result<Var>;
}

fn renormalize(mut r: Vec<f64>) -> Vec<f64> {
    let s: f64 = r.iter().sum();
    if s > 0.0 {
        r.iter_mut().for_each(|v| *v /= s);
    } else {
        let n = r.len() as f64;
        r.iter_mut().for_each(|v| *v = 1.0 / n);
    }
    r
}

fn renormalize_on_tape(tape: &mut Tape, r: Var, len: usize) -> Result<Var> {
    let s = tape.sum(r);
    let denom = tape.concat(&vec![s; len]);
    tape.div(r, denom)
}

/// `r[j] = (1/T) Σ_i α[i][j]`, renormalised.
pub struct ColumnMean;

impl RelevanceReduction for ColumnMean {
    fn name(&self) -> &'static str {
        "column_mean"
    }

    fn reduce(&self, alpha: &Tensor) -> Vec<f64> {
        let t_len = alpha.rows();
        let mut r = vec![0.0; alpha.cols()];
        for i in 0..t_len {
            for (o, v) in r.iter_mut().zip(alpha.row(i)) {
                *o += v;
            }
        }
        r.iter_mut().for_each(|v| *v /= t_len as f64);
        renormalize(r)
    }

    fn reduce_on_tape(&self, tape: &mut Tape, alpha_rows: &[Var]) -> Result<Var> {
        let total = tape.add_n(alpha_rows)?;
        let mean = tape.scale(total, 1.0 / alpha_rows.len() as f64);
        renormalize_on_tape(tape, mean, alpha_rows.len())
    }
}

/// `r[t] = α[t][t]`, renormalised.
pub struct Diagonal;

impl RelevanceReduction for Diagonal {
    fn name(&self) -> &'static str {
        "diagonal"
    }

    fn reduce(&self, alpha: &Tensor) -> Vec<f64> {
        renormalize((0..alpha.rows()).map(|t| alpha.at(t, t)).collect())
    }

    fn reduce_on_tape(&self, tape: &mut Tape, alpha_rows: &[Var]) -> Result<Var> {
        let diag = alpha_rows
            .iter()
            .enumerate()
            .map(|(t, row)| tape.slice(*row, t, 1))
            .collect::<Result<Vec<_>>>()?;
        let r = tape.concat(&diag);
        renormalize_on_tape(tape, r, alpha_rows.len())
    }
}

pub type RelevanceCtor = fn() -> Box<dyn RelevanceReduction>;

pub fn relevance_reductions() -> &'static Registry<RelevanceCtor> {
    static REG: OnceLock<Registry<RelevanceCtor>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<RelevanceCtor> = Registry::new("relevance reduction");
        reg.register("column_mean", || Box::new(ColumnMean))
            .register("diagonal", || Box::new(Diagonal));
        reg
    })
}

pub fn build_relevance(name: &str) -> Result<Box<dyn RelevanceReduction>> {
    Ok(relevance_reductions().get(name)?())
}

/// Default reduction (column mean).
pub fn relevance(alpha: &Tensor) -> Vec<f64> {
    ColumnMean.reduce(alpha)
}
