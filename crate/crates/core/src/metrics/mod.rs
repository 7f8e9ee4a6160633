//! Evaluation metrics and the emotion-attribute taxonomy.
//!
//! Moments are population (`1/T`) moments throughout.

pub mod taxonomy;

use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::data::{LabelKind, LabelTrack, NUM_CLASSES};
use crate::error::{shape_err, Error, Result};
use crate::nn::Tensor;
use crate::registry::Registry;

pub use taxonomy::{map_attribute, EmotionTaxonomy, NONE_CLASS};

fn moments(y: &[f64], y_hat: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    if y.len() != y_hat.len() {
        return shape_err(format!(
            "metric: lengths {} and {} differ",
            y.len(),
            y_hat.len()
        ));
    }
    if y.len() < 2 {
        return Err(Error::Metric(format!(
            "need at least 2 timesteps, got {}",
            y.len()
        )));
    }
    let n = y.len() as f64;
    let (my, mh) = (y.iter().sum::<f64>() / n, y_hat.iter().sum::<f64>() / n);
    let mut vy = 0.0;
    let mut vh = 0.0;
    let mut cov = 0.0;
    for (a, b) in y.iter().zip(y_hat) {
        vy += (a - my) * (a - my);
        vh += (b - mh) * (b - mh);
        cov += (a - my) * (b - mh);
    }
    let (vy, vh, cov) = (vy / n, vh / n, cov / n);
    if vy == 0.0 || vh == 0.0 {
        return Err(Error::DegenerateMetric(
            "constant track has zero variance".into(),
        ));
    }
    Ok((my, mh, vy, vh, cov))
}

/// Lin's concordance `2 cov / (σ_y² + σ_ŷ² + (μ_y − μ_ŷ)²)`.
pub fn ccc(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    let (my, mh, vy, vh, cov) = moments(y, y_hat)?;
    Ok(2.0 * cov / (vy + vh + (my - mh).powi(2)))
}

pub fn pearson(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    let (_, _, vy, vh, cov) = moments(y, y_hat)?;
    Ok((cov / (vy * vh).sqrt()).clamp(-1.0, 1.0))
}

/// Mean squared error over all entries.
pub fn mse(y: &Tensor, y_hat: &Tensor) -> Result<f64> {
    if y.shape() != y_hat.shape() {
        return shape_err(format!(
            "mse: shapes {:?} and {:?} differ",
            y.shape(),
            y_hat.shape()
        ));
    }
    if y.is_empty() {
        return Err(Error::Metric("mse of empty tracks".into()));
    }
    let s: f64 = y
        .data()
        .iter()
        .zip(y_hat.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(s / y.len() as f64)
}

fn check_classes(labels: &[usize], preds: &[usize]) -> Result<()> {
    if labels.len() != preds.len() {
        return shape_err(format!(
            "class tracks of length {} and {}",
            labels.len(),
            preds.len()
        ));
    }
    if let Some(c) = labels.iter().chain(preds).find(|c| **c >= NUM_CLASSES) {
        return Err(Error::Metric(format!("class {c} outside 0..{NUM_CLASSES}")));
    }
    Ok(())
}

pub fn top1_accuracy(labels: &[usize], preds: &[usize]) -> Result<f64> {
    check_classes(labels, preds)?;
    if labels.is_empty() {
        return Err(Error::Metric("accuracy of empty tracks".into()));
    }
    let hits = labels.iter().zip(preds).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// `counts[true][pred]` over the 27 classes.
pub fn confusion_matrix(labels: &[usize], preds: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_classes(labels, preds)?;
    let mut counts = vec![vec![0; NUM_CLASSES]; NUM_CLASSES];
    for (t, p) in labels.iter().zip(preds) {
        counts[*t][*p] += 1;
    }
    Ok(counts)
}

/// A per-sample evaluation rule, selectable by name.
pub trait Metric: Send + Sync {
    fn name(&self) -> &'static str;
    fn applies_to(&self, kind: LabelKind) -> bool;
    /// Scores one predicted track against its labels.
    fn score(&self, labels: &LabelTrack, predicted: &LabelTrack) -> Result<f64>;
    /// Direction used when selecting the best model by this metric.
    fn higher_is_better(&self) -> bool {
        true
    }
}

fn continuous_pair<'a>(
    labels: &'a LabelTrack,
    predicted: &'a LabelTrack,
) -> Result<(&'a Tensor, &'a Tensor)> {
    match (labels, predicted) {
        (LabelTrack::Continuous(y), LabelTrack::Continuous(p)) if y.shape() == p.shape() => {
            Ok((y, p))
        }
        (LabelTrack::Continuous(_), LabelTrack::Continuous(_)) => {
            shape_err("prediction and label shapes differ")
        }
        _ => Err(Error::Config(
            "metric needs continuous labels and predictions".into(),
        )),
    }
}

fn column(t: &Tensor, c: usize) -> Vec<f64> {
    (0..t.rows()).map(|r| t.at(r, c)).collect()
}

/// Mean over channels of a per-channel correlation.
fn per_channel(
    labels: &LabelTrack,
    predicted: &LabelTrack,
    f: fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    let (y, p) = continuous_pair(labels, predicted)?;
    let vals = (0..y.cols())
        .map(|c| f(&column(y, c), &column(p, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

pub struct Ccc;
pub struct Mse;
pub struct Pearson;
pub struct Top1Accuracy;

impl Metric for Ccc {
    fn name(&self) -> &'static str {
        "ccc"
    }
    fn applies_to(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Continuous
    }
    fn score(&self, labels: &LabelTrack, predicted: &LabelTrack) -> Result<f64> {
        per_channel(labels, predicted, ccc)
    }
}

impl Metric for Pearson {
    fn name(&self) -> &'static str {
        "pearson"
    }
    fn applies_to(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Continuous
    }
    fn score(&self, labels: &LabelTrack, predicted: &LabelTrack) -> Result<f64> {
        per_channel(labels, predicted, pearson)
    }
}

impl Metric for Mse {
    fn name(&self) -> &'static str {
        "mse"
    }
    fn applies_to(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Continuous
    }
    fn score(&self, labels: &LabelTrack, predicted: &LabelTrack) -> Result<f64> {
        let (y, p) = continuous_pair(labels, predicted)?;
        mse(y, p)
    }
    fn higher_is_better(&self) -> bool {
        false
    }
}

impl Metric for Top1Accuracy {
    fn name(&self) -> &'static str {
        "top1_accuracy"
    }
    fn applies_to(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Categorical
    }
    fn score(&self, labels: &LabelTrack, predicted: &LabelTrack) -> Result<f64> {
        match (labels, predicted) {
            (LabelTrack::Categorical(y), LabelTrack::Categorical(p)) => top1_accuracy(y, p),
            _ => Err(Error::Config(
                "top1_accuracy needs categorical labels and predictions".into(),
            )),
        }
    }
}

pub type MetricCtor = fn() -> Box<dyn Metric>;

pub fn metrics() -> &'static Registry<MetricCtor> {
    static REG: OnceLock<Registry<MetricCtor>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<MetricCtor> = Registry::new("metric");
        reg.register("ccc", || Box::new(Ccc))
            .register("mse", || Box::new(Mse))
            .register("pearson", || Box::new(Pearson))
            .register("top1_accuracy", || Box::new(Top1Accuracy));
        reg
    })
}

pub fn build_metric(name: &str) -> Result<Box<dyn Metric>> {
    Ok(metrics().get(name)?())
}

/// Registered metrics that apply to `kind`, in registration order.
pub fn default_metrics(kind: LabelKind) -> Vec<Box<dyn Metric>> {
    metrics()
        .names()
        .into_iter()
        .map(|n| build_metric(n).expect("registered"))
        .filter(|m| m.applies_to(kind))
        .collect()
}

/// Per-sample value, or `None` when the metric is degenerate there.
pub type SampleScore = (String, Option<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct MetricResult {
    pub name: String,
    /// Unweighted mean over non-degenerate samples.
    pub value: Option<f64>,
    pub per_sample: Vec<SampleScore>,
}

/// Scores every `(sample_id, labels, predicted)` triple; degenerate samples
/// are kept in `per_sample` but left out of the mean.
pub fn evaluate(
    metric: &dyn Metric,
    samples: &[(String, LabelTrack, LabelTrack)],
) -> Result<MetricResult> {
    let mut per_sample = Vec::with_capacity(samples.len());
    for (id, labels, predicted) in samples {
        match metric.score(labels, predicted) {
            Ok(v) => per_sample.push((id.clone(), Some(v))),
            Err(Error::DegenerateMetric(_)) => per_sample.push((id.clone(), None)),
            Err(e) => return Err(e),
        }
    }
    let kept: Vec<f64> = per_sample.iter().filter_map(|(_, v)| *v).collect();
    let value = (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64);
    Ok(MetricResult {
        name: metric.name().to_string(),
        value,
        per_sample,
    })
}

/// Marker written in place of a value for degenerate rows.
pub const DEGENERATE: &str = "degenerate";
/// `sample_id` of aggregate rows.
pub const AGGREGATE: &str = "mean";

/// `metric,sample_id,value` rows followed by one aggregate row per metric.
pub fn write_metrics_report(results: &[MetricResult]) -> String {
    let mut out = String::from("metric,sample_id,value\n");
    let fmt = |v: Option<f64>| v.map_or(DEGENERATE.to_string(), |v| format!("{v}"));
    for r in results {
        for (id, v) in &r.per_sample {
            writeln!(out, "{},{id},{}", r.name, fmt(*v)).expect("write to String");
        }
        writeln!(out, "{},{AGGREGATE},{}", r.name, fmt(r.value)).expect("write to String");
    }
    out
}
