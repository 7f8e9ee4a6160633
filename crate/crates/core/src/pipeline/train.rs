use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::AlignedSample;
use crate::error::{Error, Result};
use crate::gc::encoder::encode_on_tape;
use crate::gc::prox_group_lasso;
use crate::gc::var::var_loss_on_tape;
use crate::metrics::{build_metric, evaluate, Metric, MetricResult};
use crate::nn::{build_optimizer, OptimizerConfig, Tape, Tensor};
use crate::pipeline::config::VarMode;
use crate::pipeline::model::{Feedback, PipelineModel, Prediction};

/// One row of the training history.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample training objective over the epoch.
    pub train_loss: f64,
    /// Validation metric, absent without a validation set or when
    /// degenerate on every sample.
    pub val_metric: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters the model holds after training.
    pub best_epoch: Option<usize>,
}

/// Salt separating the shuffle stream from parameter initialisation.
const SHUFFLE_STREAM: u64 = 0x5348_5546;

fn divergence(what: &str, epoch: usize, sample: &str) -> Error {
    Error::Divergence(format!(
        "non-finite {what} at epoch {epoch}, sample '{sample}'"
    ))
}

/// Trains with batch size 1. On divergence the model is left at the
/// parameters of the last finite step and the error is returned.
pub fn train(
    model: &mut PipelineModel,
    train_set: &[AlignedSample],
    val_set: &[AlignedSample],
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    for s in train_set.iter().chain(val_set) {
        model.check_sample(s)?;
    }
    let cfg = model.config.clone();
    let metric = build_metric(cfg.val_metric_name())?;
    if !metric.applies_to(cfg.label_kind) {
        return Err(Error::Config(format!(
            "val_metric '{}' does not apply to {:?} labels",
            metric.name(),
            cfg.label_kind
        )));
    }
    let mut opt = build_optimizer(&cfg.optimizer, OptimizerConfig::with_lr(cfg.lr))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut outcome = TrainOutcome::default();
    let mut best: Option<f64> = None;
    let mut best_params = model.store.snapshot();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &idx in &order {
            let sample = &train_set[idx];
            let last_good = model.store.snapshot();
            let loss = match train_step(model, sample, opt.as_mut(), epoch) {
                Ok(loss) => loss,
                Err(e) => {
                    model.store.restore(&last_good);
                    return Err(e);
                }
            };
            total += loss;
        }
        let val_metric = if val_set.is_empty() {
            None
        } else {
            evaluate_model(model, val_set, &[metric.as_ref()])?
                .remove(0)
                .value
        };
        outcome.history.push(EpochRecord {
            epoch,
            train_loss: total / train_set.len() as f64,
            val_metric,
        });
        let improved = match (val_metric, best) {
            _ if val_set.is_empty() => true,
            (Some(v), Some(b)) => {
                if metric.higher_is_better() {
                    v > b
                } else {
                    v < b
                }
            }
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            best = val_metric.or(best);
            best_params = model.store.snapshot();
            outcome.best_epoch = Some(epoch);
        }
    }
    model.store.restore(&best_params);
    Ok(outcome)
}

/// One optimizer step on one sample; returns the sample's objective.
fn train_step(
    model: &mut PipelineModel,
    sample: &AlignedSample,
    opt: &mut dyn crate::nn::Optimizer,
    epoch: usize,
) -> Result<f64> {
    let cfg = &model.config;
    let mut tape = Tape::new();
    let feedback = if cfg.teacher_forcing {
        Feedback::Teacher(&sample.labels)
    } else {
        Feedback::Predicted
    };
    let fwd = model.forward_on_tape(&mut tape, sample, feedback)?;
    let loss = model.loss_on_tape(&mut tape, &fwd, &sample.labels)?;
    let value = tape.scalar(loss.total);
    if !value.is_finite() {
        return Err(divergence("loss", epoch, &sample.sample_id));
    }
    let targets = model.stacked_inputs(&tape, &fwd)?;
    model.store.zero_grad();
    tape.backward_into(loss.total, &mut model.store)?;
    if model.store.iter().any(|p| !p.grad.is_finite()) {
        return Err(divergence("gradient", epoch, &sample.sample_id));
    }
    opt.step(&mut model.store);
    let (use_gc, mode, lr, lr_var, lambda) = (
        cfg.use_gc,
        cfg.var_mode,
        cfg.lr,
        cfg.lr_var,
        cfg.lambda_group,
    );
    if use_gc {
        prox_group_lasso(&model.encoder, &mut model.store, lr, lambda);
        if mode == VarMode::Alternating && targets.rows() >= 2 {
            var_step(model, &targets, lr_var)?;
            prox_group_lasso(&model.encoder, &mut model.store, lr_var, lambda);
        }
    }
    if !model.store.all_finite() {
        return Err(divergence("parameters", epoch, &sample.sample_id));
    }
    Ok(value)
}

/// Plain gradient step on the encoder's VAR objective over fixed inputs.
fn var_step(model: &mut PipelineModel, targets: &Tensor, lr_var: f64) -> Result<()> {
    let mut tape = Tape::new();
    let rows: Vec<_> = (0..targets.rows())
        .map(|t| tape.constant_vec(targets.row(t).to_vec()))
        .collect();
    let encoded = encode_on_tape(&model.encoder, &mut tape, &model.store, &rows)?;
    let loss = var_loss_on_tape(
        &model.encoder,
        &mut tape,
        &encoded,
        targets,
        model.config.ridge,
    )?;
    model.store.zero_grad();
    tape.backward_into(loss, &mut model.store)?;
    let ids: Vec<_> = model
        .encoder
        .components
        .iter()
        .flat_map(|c| [c.w_ih, c.w_hh, c.bias, c.head_w, c.head_b])
        .collect();
    for id in ids {
        let p = model.store.get_mut(id);
        for (w, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
            *w -= lr_var * g;
        }
    }
    Ok(())
}

/// Autoregressive predictions for every sample, in input order.
pub fn predict_all(model: &PipelineModel, samples: &[AlignedSample]) -> Result<Vec<Prediction>> {
    samples.par_iter().map(|s| model.predict(s)).collect()
}

/// Scores predictions with each metric.
pub fn evaluate_model(
    model: &PipelineModel,
    samples: &[AlignedSample],
    metrics: &[&dyn Metric],
) -> Result<Vec<MetricResult>> {
    let preds = predict_all(model, samples)?;
    let triples: Vec<_> = samples
        .iter()
        .zip(preds)
        .map(|(s, p)| (s.sample_id.clone(), s.labels.clone(), p.track))
        .collect();
    metrics.iter().map(|m| evaluate(*m, &triples)).collect()
}

/// `epoch,train_loss,val_metric` CSV; missing validation values are empty.
pub fn write_history(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_metric\n");
    for r in history {
        let val = r.val_metric.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, val));
    }
    out
}
