//! Central finite-difference gradient checking.

use crate::error::Result;
use crate::nn::{ParamStore, Tape, Tensor, Var};

/// Smallest magnitude used as the denominator of the relative error, so
/// that coordinates whose true gradient is ~0 are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

#[derive(Clone, Debug)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_rel_error)
            .fold(0.0, f64::max)
    }
}

/// Reverse-mode gradients of `forward`'s scalar output, one tensor per
/// parameter in store order.
pub fn analytic_gradients<F>(store: &ParamStore, forward: &F) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut work = store.clone();
    work.zero_grad();
    let mut tape = Tape::new();
    let loss = forward(&mut tape, &work)?;
    tape.backward_into(loss, &mut work)?;
    Ok(work.iter().map(|p| p.grad.clone()).collect())
}

/// Compares `analytic` against central differences of `loss` with the given
/// `step`, parameter by parameter.
pub fn compare_gradients<L>(
    store: &ParamStore,
    analytic: &[Tensor],
    loss: L,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    L: Fn(&ParamStore) -> Result<f64>,
{
    let mut work = store.clone();
    let mut entries = Vec::with_capacity(store.len());
    let ids: Vec<_> = store.ids().collect();
    for (id, grad) in ids.into_iter().zip(analytic) {
        let mut worst = (0.0, 0);
        for i in 0..grad.len() {
            let orig = work.value(id).data()[i];
            work.value_mut(id).data_mut()[i] = orig + step;
            let up = loss(&work)?;
            work.value_mut(id).data_mut()[i] = orig - step;
            let down = loss(&work)?;
            work.value_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let err = relative_error(grad.data()[i], numeric);
            if err > worst.0 || err.is_nan() {
                worst = (err, i);
            }
        }
        entries.push(GradCheckEntry {
            name: store.get(id).name.clone(),
            max_rel_error: worst.0,
            worst_index: worst.1,
        });
    }
    let passed = entries.iter().all(|e| e.max_rel_error <= tolerance);
    Ok(GradCheckReport {
        entries,
        tolerance,
        passed,
    })
}

/// Full check: builds the graph with `forward`, differentiates it, and
/// compares against finite differences of the same closure.
pub fn grad_check<F>(
    store: &ParamStore,
    forward: F,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let analytic = analytic_gradients(store, &forward)?;
    compare_gradients(
        store,
        &analytic,
        |s| {
            let mut tape = Tape::new();
            let out = forward(&mut tape, s)?;
            Ok(tape.scalar(out))
        },
        step,
        tolerance,
    )
}
