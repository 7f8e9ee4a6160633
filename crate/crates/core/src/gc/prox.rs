//! Block soft-thresholding for the group-lasso penalty on input weights.

use crate::gc::encoder::ClstmEncoder;
use crate::nn::{ParamStore, Tensor};

/// Shrinks each `embed`-wide column block of `w` toward zero by
/// `threshold` in Frobenius norm; blocks at or below the threshold become
/// exactly zero.
pub fn prox_blocks(w: &mut Tensor, embed: usize, threshold: f64) {
    if threshold <= 0.0 {
        return;
    }
    let (rows, cols) = (w.rows(), w.cols());
    let data = w.data_mut();
    for k in 0..cols / embed {
        let range = k * embed..(k + 1) * embed;
        let norm = (0..rows)
            .flat_map(|r| data[r * cols..(r + 1) * cols][range.clone()].iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let kept = if norm <= threshold {
            0.0
        } else {
            norm - threshold
        };
        for r in 0..rows {
            data[r * cols..(r + 1) * cols][range.clone()]
                .iter_mut()
                .for_each(|v| *v = if kept == 0.0 { 0.0 } else { *v * kept / norm });
        }
    }
}

/// Group penalty `Σ_k ‖W_{:k}‖` of one input-weight matrix.
pub fn group_penalty(w: &Tensor, embed: usize) -> f64 {
    let cols = w.cols();
    (0..cols / embed)
        .map(|k| {
            (0..w.rows())
                .flat_map(|r| w.row(r)[k * embed..(k + 1) * embed].iter())
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// Applies the proximal step with threshold `step·λ` to every component's
/// input weights. Recurrent weights, biases and heads are untouched.
pub fn prox_group_lasso(encoder: &ClstmEncoder, store: &mut ParamStore, step: f64, lambda: f64) {
    let threshold = step * lambda;
    for id in encoder.input_weight_ids() {
        prox_blocks(store.value_mut(id), encoder.embed, threshold);
    }
}
