use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use affect_core::data::{
    load_dataset, load_split_file, random_adjacency, save_dataset, split_samples, write_split_file,
    AlignPolicy, AlignedSample, LabelKind, LabelTrack, SplitName, Splits, SyntheticLabels,
    SyntheticSpec, VarProcess,
};
use affect_core::gc::{
    edge_metrics, fit_path, parse_gc_report, stack_rows, standardize, var_loss, write_gc_report,
    ClstmEncoder, EdgeMetrics, GCMatrix, VarTrainConfig,
};
use affect_core::metrics::{build_metric, default_metrics, write_metrics_report, Metric};
use affect_core::nn::{ParamStore, Tensor};
use affect_core::pipeline::{
    evaluate_model, predict_all, train, write_history, PipelineConfig, PipelineModel, Prediction,
};
use affect_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{field_names, RunConfig};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const GC_TRUTH_FILE: &str = "gc_truth.csv";
pub const SPLITS_FILE: &str = "splits.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const GC_REPORT_FILE: &str = "gc_report.csv";
pub const GC_METRICS_FILE: &str = "gc_metrics.csv";
pub const GC_PATH_FILE: &str = "gc_path.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const COATTENTION_FILE: &str = "coattention.csv";

/// Keys shared by every command.
const COMMON_KEYS: &[&str] = &["seed", "out"];

fn allowed(own: &[&str], structs: Vec<Vec<String>>) -> Vec<String> {
    let mut keys: Vec<String> = COMMON_KEYS
        .iter()
        .chain(own)
        .map(|s| s.to_string())
        .collect();
    keys.extend(structs.into_iter().flatten());
    keys
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.require_path("out")?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::Config(format!(
            "{what} '{}' does not exist",
            path.display()
        )))
    }
}

/// Writes the run manifest; the only output that carries wall-clock data.
fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    resolved: Value,
    started: Instant,
) -> Result<()> {
    let finished = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "command": command,
        "format_version": FORMAT_VERSION,
        "seed": cfg.get("seed"),
        "config": cfg.to_json(),
        "resolved": resolved,
        "wall_time_secs": started.elapsed().as_secs_f64(),
        "finished_unix": finished,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

/// Settings of `synth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub p: usize,
    pub d: usize,
    /// Number of samples.
    pub n: usize,
    pub t_len: usize,
    pub density: f64,
    pub self_loops: bool,
    pub coeff_scale: f64,
    pub noise_std: f64,
    pub lag: usize,
    pub burn_in: usize,
    pub label_kind: LabelKind,
    pub label_channels: usize,
    pub label_cause: usize,
    pub label_gain: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            p: 3,
            d: 2,
            n: 20,
            t_len: 50,
            density: 0.3,
            self_loops: false,
            coeff_scale: 0.5,
            noise_std: 0.1,
            lag: 1,
            burn_in: 100,
            label_kind: LabelKind::Continuous,
            label_channels: 1,
            label_cause: 0,
            label_gain: 2.0,
            train_fraction: 0.7,
            val_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn spec(&self) -> SyntheticSpec {
        let mut spec = SyntheticSpec::new(
            self.p,
            self.d,
            self.t_len,
            random_adjacency(self.p, self.density, self.seed, self.self_loops),
        );
        spec.coeff_scale = self.coeff_scale;
        spec.noise_std = self.noise_std;
        spec.seed = self.seed;
        spec.lag = self.lag;
        spec.burn_in = self.burn_in;
        spec.labels = SyntheticLabels {
            kind: self.label_kind,
            channels: self.label_channels,
            cause: self.label_cause,
            gain: self.label_gain,
        };
        spec
    }
}

/// Per-sample simulation seed, distinct from the process seed stream.
fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(i as u64 + 1)
}

pub fn synth(cfg: &RunConfig) -> Result<String> {
    let started = Instant::now();
    cfg.check_keys("synth", &allowed(&[], vec![field_names::<SynthConfig>()]))?;
    let sc: SynthConfig = cfg.overlay(&SynthConfig::default())?;
    if sc.n < 3 {
        return Err(Error::Config(format!(
            "n must be >= 3 to fill three splits, got {}",
            sc.n
        )));
    }
    let spec = sc.spec();
    spec.validate()?;
    let process = VarProcess::from_spec(&spec)?;
    let samples = (0..sc.n)
        .map(|i| process.sample(&spec, &format!("s{i:03}"), sample_seed(sc.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(cfg)?;
    save_dataset(&dir, &samples)?;
    fs::write(
        dir.join(GC_TRUTH_FILE),
        write_gc_report(&process.ground_truth(), None),
    )?;
    let ids: Vec<String> = samples.iter().map(|s| s.sample_id.clone()).collect();
    let splits = split_samples(
        &ids,
        [sc.train_fraction, sc.val_fraction, sc.test_fraction],
        sc.seed,
    )?;
    fs::write(dir.join(SPLITS_FILE), write_split_file(&splits))?;
    let resolved = json!({ "synth": sc, "rescale_attempts": process.rescale_attempts });
    write_manifest(&dir, "synth", cfg, resolved, started)?;
    Ok(format!("wrote {} samples to {}", sc.n, dir.display()))
}

/// Dataset and split assignment named by `data` / `splits`.
struct Data {
    dir: PathBuf,
    splits: Splits<AlignedSample>,
}

fn load_data(cfg: &RunConfig) -> Result<Data> {
    let dir = existing(cfg.require_path("data")?, "data directory")?;
    let policy: AlignPolicy = cfg.parsed_or("align", AlignPolicy::default())?;
    let samples = load_dataset(&dir, policy)?;
    let split_path = existing(
        cfg.path("splits").unwrap_or_else(|| dir.join(SPLITS_FILE)),
        "split file",
    )?;
    let ids = load_split_file(split_path)?;
    let pick = |names: &[String]| -> Result<Vec<AlignedSample>> {
        names
            .iter()
            .map(|id| {
                samples
                    .iter()
                    .find(|s| &s.sample_id == id)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("split names unknown sample '{id}'")))
            })
            .collect()
    };
    Ok(Data {
        splits: Splits {
            train: pick(&ids.train)?,
            val: pick(&ids.val)?,
            test: pick(&ids.test)?,
        },
        dir,
    })
}

/// Samples of the split named by `key` (or `default`); `all` joins splits.
fn select_split(
    cfg: &RunConfig,
    data: &Data,
    key: &str,
    default: &str,
) -> Result<Vec<AlignedSample>> {
    let name = cfg.get(key).unwrap_or(default);
    let picked = if name == "all" {
        SplitName::ALL
            .iter()
            .flat_map(|s| data.splits.get(*s).to_vec())
            .collect()
    } else {
        data.splits.get(name.parse::<SplitName>()?).to_vec()
    };
    if picked.is_empty() {
        return Err(Error::Config(format!("split '{name}' is empty")));
    }
    Ok(picked)
}

fn label_shape(labels: &LabelTrack) -> (LabelKind, usize) {
    (labels.kind(), labels.channels())
}

fn check_label_kind(model: &PipelineModel, samples: &[AlignedSample]) -> Result<()> {
    let want = (model.config.label_kind, model.config.label_channels);
    for s in samples {
        let (kind, channels) = label_shape(&s.labels);
        let ok = kind == want.0 && (kind == LabelKind::Categorical || channels == want.1);
        if !ok {
            return Err(Error::Config(format!(
                "sample '{}' has {kind:?} labels with {channels} channels; checkpoint expects {:?} with {}",
                s.sample_id, want.0, want.1
            )));
        }
    }
    Ok(())
}

const TRAIN_KEYS: &[&str] = &["data", "splits", "align", "gc_epsilon"];
const DEFAULT_GC_EPSILON: f64 = 1e-3;

pub fn train_cmd(cfg: &RunConfig) -> Result<String> {
    let started = Instant::now();
    cfg.check_keys(
        "train",
        &allowed(TRAIN_KEYS, vec![field_names::<PipelineConfig>()]),
    )?;
    let mut pc: PipelineConfig = cfg.overlay(&PipelineConfig::default())?;
    let data = load_data(cfg)?;
    let first = data
        .splits
        .train
        .first()
        .ok_or_else(|| Error::Config("train split is empty".into()))?;
    let (kind, channels) = label_shape(&first.labels);
    if !cfg.contains("label_kind") {
        pc.label_kind = kind;
    }
    if !cfg.contains("label_channels") && kind == LabelKind::Continuous {
        pc.label_channels = channels;
    }
    let dims = first.modality_dims();
    let mut model = PipelineModel::new(pc, &dims)?;
    check_label_kind(&model, &data.splits.train)?;
    check_label_kind(&model, &data.splits.val)?;
    let dir = out_dir(cfg)?;
    let result = train(&mut model, &data.splits.train, &data.splits.val);
    model.save(dir.join(CHECKPOINT_FILE))?;
    let outcome = result?;
    fs::write(dir.join(HISTORY_FILE), write_history(&outcome.history))?;
    if model.config.use_gc {
        let eps = cfg.parsed_or("gc_epsilon", DEFAULT_GC_EPSILON)?;
        fs::write(
            dir.join(GC_REPORT_FILE),
            write_gc_report(
                &model.granger_causality(eps)?,
                Some(model.config.lambda_group),
            ),
        )?;
    }
    let resolved = json!({ "pipeline": model.config, "modality_dims": dims, "best_epoch": outcome.best_epoch });
    write_manifest(&dir, "train", cfg, resolved, started)?;
    Ok(format!(
        "trained {} epochs on {} samples (data {}); best epoch {}",
        outcome.history.len(),
        data.splits.train.len(),
        data.dir.display(),
        outcome
            .best_epoch
            .map_or("none".to_string(), |e| e.to_string())
    ))
}

const EVAL_KEYS: &[&str] = &["data", "splits", "align", "checkpoint", "split", "metrics"];

fn metric_list(cfg: &RunConfig, kind: LabelKind) -> Result<Vec<Box<dyn Metric>>> {
    match cfg.get("metrics") {
        None | Some("auto") => Ok(default_metrics(kind)),
        Some(list) => list
            .split(',')
            .map(|n| {
                let m = build_metric(n.trim())?;
                if m.applies_to(kind) {
                    Ok(m)
                } else {
                    Err(Error::Config(format!(
                        "metric '{}' does not apply to {kind:?} labels",
                        m.name()
                    )))
                }
            })
            .collect(),
    }
}

pub fn eval(cfg: &RunConfig) -> Result<String> {
    let started = Instant::now();
    cfg.check_keys("eval", &allowed(EVAL_KEYS, vec![]))?;
    let model = PipelineModel::load(existing(cfg.require_path("checkpoint")?, "checkpoint")?)?;
    let data = load_data(cfg)?;
    let samples = select_split(cfg, &data, "split", "test")?;
    check_label_kind(&model, &samples)?;
    let metrics = metric_list(cfg, model.config.label_kind)?;
    let refs: Vec<&dyn Metric> = metrics.iter().map(|m| m.as_ref()).collect();
    let results = evaluate_model(&model, &samples, &refs)?;
    let dir = out_dir(cfg)?;
    fs::write(dir.join(METRICS_FILE), write_metrics_report(&results))?;
    write_manifest(
        &dir,
        "eval",
        cfg,
        json!({ "samples": samples.len() }),
        started,
    )?;
    let summary: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "{}={}",
                r.name,
                r.value
                    .map_or("degenerate".to_string(), |v| format!("{v:.6}"))
            )
        })
        .collect();
    Ok(summary.join(" "))
}

/// `gc` reads a trained model in checkpoint mode and a dataset in fit mode.
const GC_KEYS: &[&str] = &[
    "data",
    "splits",
    "align",
    "checkpoint",
    "truth",
    "epsilon",
    "sample",
    "validation_sample",
    "hidden",
    "zscore",
    "grid_lo",
    "grid_hi",
    "grid_points",
];

fn gc_metrics_csv(m: &EdgeMetrics, lambda: Option<f64>) -> String {
    let mut out = String::from("metric,value\n");
    for (name, v) in [
        ("precision", m.precision),
        ("recall", m.recall),
        ("accuracy", m.accuracy),
    ] {
        writeln!(out, "{name},{v}").expect("write to String");
    }
    let auroc = m.auroc.map(|v| v.to_string()).unwrap_or_default();
    writeln!(out, "auroc,{auroc}").expect("write to String");
    if let Some(l) = lambda {
        writeln!(out, "lambda,{l}").expect("write to String");
    }
    out
}

fn load_truth(cfg: &RunConfig) -> Result<Option<GCMatrix>> {
    let path = match (cfg.path("truth"), cfg.path("data")) {
        (Some(p), _) => Some(existing(p, "truth file")?),
        (None, Some(d)) => Some(d.join(GC_TRUTH_FILE)).filter(|p| p.exists()),
        (None, None) => None,
    };
    path.map(|p| Ok(parse_gc_report(&fs::read_to_string(p)?)?.0))
        .transpose()
}

/// Explicit keys of the VAR fit, with defaults suited to a λ grid.
pub fn gc_fit_defaults() -> VarTrainConfig {
    VarTrainConfig {
        ridge: 1.0,
        lr_var: 1.0,
        max_iters: 300,
        ..VarTrainConfig::default()
    }
}

pub fn gc(cfg: &RunConfig) -> Result<String> {
    let started = Instant::now();
    cfg.check_keys(
        "gc",
        &allowed(GC_KEYS, vec![field_names::<VarTrainConfig>()]),
    )?;
    let eps = cfg.parsed_or("epsilon", DEFAULT_GC_EPSILON)?;
    let truth = load_truth(cfg)?;
    let dir = out_dir(cfg)?;
    let (estimate, lambda, resolved) = match cfg.path("checkpoint") {
        Some(path) => {
            let model = PipelineModel::load(existing(path, "checkpoint")?)?;
            let lambda = model.config.use_gc.then_some(model.config.lambda_group);
            (
                model.granger_causality(eps)?,
                lambda,
                json!({ "mode": "checkpoint" }),
            )
        }
        None => gc_fit(cfg, &dir, truth.as_ref(), eps)?,
    };
    fs::write(dir.join(GC_REPORT_FILE), write_gc_report(&estimate, lambda))?;
    let mut summary = format!(
        "{} x {} GC matrix, {} edges",
        estimate.p(),
        estimate.p(),
        estimate.num_edges()
    );
    if let Some(t) = &truth {
        let m = edge_metrics(&estimate, &t.adjacency)?;
        fs::write(dir.join(GC_METRICS_FILE), gc_metrics_csv(&m, lambda))?;
        write!(summary, "; accuracy {:.4}", m.accuracy).expect("write to String");
    }
    write_manifest(&dir, "gc", cfg, resolved, started)?;
    Ok(summary)
}

fn stacked_features(sample: &AlignedSample) -> Result<Tensor> {
    let parts: Vec<Tensor> = sample.streams.iter().map(|s| s.values().clone()).collect();
    stack_rows(&parts)
}

fn sample_by_id<'a>(all: &'a [AlignedSample], id: &str) -> Result<&'a AlignedSample> {
    all.iter()
        .find(|s| s.sample_id == id)
        .ok_or_else(|| Error::Config(format!("no sample '{id}' in the dataset")))
}

/// Fits the encoder on raw features over a λ grid and selects one point:
/// by edge accuracy (then AUROC) when ground truth is known, otherwise by
/// one-step loss on a held-out sample, otherwise the smallest λ.
fn gc_fit(
    cfg: &RunConfig,
    dir: &Path,
    truth: Option<&GCMatrix>,
    eps: f64,
) -> Result<(GCMatrix, Option<f64>, Value)> {
    let data = load_data(cfg)?;
    let all: Vec<AlignedSample> = SplitName::ALL
        .iter()
        .flat_map(|s| data.splits.get(*s).to_vec())
        .collect();
    let mut ordered = all.clone();
    ordered.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let fit_sample = match cfg.get("sample") {
        Some(id) => sample_by_id(&all, id)?,
        None => data
            .splits
            .train
            .first()
            .ok_or_else(|| Error::Config("train split is empty".into()))?,
    };
    let val_sample = match cfg.get("validation_sample") {
        Some(id) => Some(sample_by_id(&all, id)?),
        None => ordered.iter().find(|s| s.sample_id != fit_sample.sample_id),
    };
    let dims = fit_sample.modality_dims();
    if dims.iter().any(|d| *d != dims[0]) {
        return Err(Error::Config(format!(
            "gc fit needs equal modality widths, got {dims:?}"
        )));
    }
    let zscore = cfg.parsed_or("zscore", true)?;
    let prep = |s: &AlignedSample| -> Result<Tensor> {
        let x = stacked_features(s)?;
        Ok(if zscore { standardize(&x) } else { x })
    };
    let x = prep(fit_sample)?;
    let var_cfg: VarTrainConfig = cfg.overlay(&gc_fit_defaults())?;
    let grid = var_cfg.lambda_grid(
        cfg.parsed_or("grid_lo", 1e3)?,
        cfg.parsed_or("grid_hi", 1e6)?,
        cfg.parsed_or("grid_points", 10usize)?,
    );
    let seed = cfg.parsed_or("seed", 0u64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let encoder = ClstmEncoder::new(
        &mut store,
        "enc",
        dims.len(),
        dims[0],
        cfg.parsed_or("hidden", 4usize)?,
        &mut rng,
    )?;
    let path = fit_path(&encoder, &mut store, &x, &var_cfg, &grid, eps)?;
    let x_val = val_sample.map(prep).transpose()?;

    let mut rows =
        String::from("lambda,edges,objective,heldout_loss,precision,recall,accuracy,auroc\n");
    let mut scored = Vec::with_capacity(path.len());
    for point in &path {
        store.restore(&point.snapshot);
        let heldout = x_val
            .as_ref()
            .map(|xv| var_loss(&encoder, &store, xv, 0.0))
            .transpose()?;
        let metrics = truth
            .map(|t| edge_metrics(&point.gc, &t.adjacency))
            .transpose()?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            rows,
            "{},{},{},{},{},{},{},{}",
            point.lambda,
            point.gc.num_edges(),
            opt(point.fit.final_objective()),
            opt(heldout),
            opt(metrics.as_ref().map(|m| m.precision)),
            opt(metrics.as_ref().map(|m| m.recall)),
            opt(metrics.as_ref().map(|m| m.accuracy)),
            opt(metrics.as_ref().and_then(|m| m.auroc)),
        )
        .expect("write to String");
        scored.push((metrics, heldout));
    }
    fs::write(dir.join(GC_PATH_FILE), rows)?;
    let better = |a: &(Option<EdgeMetrics>, Option<f64>),
                  b: &(Option<EdgeMetrics>, Option<f64>)| match (a, b) {
        ((Some(ma), _), (Some(mb), _)) => {
            let auc = |m: &EdgeMetrics| m.auroc.unwrap_or(f64::NEG_INFINITY);
            ma.accuracy > mb.accuracy || (ma.accuracy == mb.accuracy && auc(ma) > auc(mb))
        }
        ((_, Some(la)), (_, Some(lb))) => la < lb,
        _ => false,
    };
    let mut best = 0;
    for i in 1..scored.len() {
        if better(&scored[i], &scored[best]) {
            best = i;
        }
    }
    let chosen = &path[best];
    let resolved = json!({
        "mode": "fit",
        "sample": fit_sample.sample_id,
        "validation_sample": val_sample.map(|s| s.sample_id.clone()),
        "var": var_cfg,
        "lambdas": grid,
        "selected_lambda": chosen.lambda,
    });
    Ok((chosen.gc.clone(), Some(chosen.lambda), resolved))
}

const PREDICT_KEYS: &[&str] = &["data", "splits", "align", "checkpoint", "split", "sample"];

fn prediction_csv(
    model: &PipelineModel,
    preds: &[Prediction],
    samples: &[AlignedSample],
) -> String {
    let mut out = String::from("sample_id,t");
    let channel_names = ["valence", "arousal"];
    match model.config.label_kind {
        LabelKind::Continuous => {
            let names = &channel_names[..model.config.label_channels];
            for n in names {
                write!(out, ",{n}").expect("write to String");
            }
            for n in names {
                write!(out, ",label_{n}").expect("write to String");
            }
        }
        LabelKind::Categorical => {
            out.push_str(",class");
            for k in 0..model.output_size() {
                write!(out, ",logit_{k}").expect("write to String");
            }
            out.push_str(",label");
        }
    }
    out.push('\n');
    for (pred, sample) in preds.iter().zip(samples) {
        for t in 0..pred.outputs.rows() {
            write!(out, "{},{t}", pred.sample_id).expect("write to String");
            match (&pred.track, &sample.labels) {
                (LabelTrack::Continuous(y_hat), LabelTrack::Continuous(y)) => {
                    for v in y_hat.row(t).iter().chain(y.row(t)) {
                        write!(out, ",{v}").expect("write to String");
                    }
                }
                (LabelTrack::Categorical(classes), LabelTrack::Categorical(labels)) => {
                    write!(out, ",{}", classes[t]).expect("write to String");
                    for v in pred.outputs.row(t) {
                        write!(out, ",{v}").expect("write to String");
                    }
                    write!(out, ",{}", labels[t]).expect("write to String");
                }
                _ => unreachable!("label kinds are checked before prediction"),
            }
            out.push('\n');
        }
    }
    out
}

/// `sample_id,t,pair,relevance`, one row per modality pair per timestep.
fn coattention_csv(preds: &[Prediction], samples: &[AlignedSample]) -> String {
    let mut out = String::from("sample_id,t,pair,relevance\n");
    for (pred, sample) in preds.iter().zip(samples) {
        let maps = &pred.diagnostics.coattention;
        for t in 0..pred.outputs.rows() {
            for m in maps {
                let (i, j) = m.pair;
                let name = |k: usize| sample.streams[k].modality_name.as_str();
                writeln!(
                    out,
                    "{},{t},{}-{},{}",
                    pred.sample_id,
                    name(i),
                    name(j),
                    m.relevance[t]
                )
                .expect("write to String");
            }
        }
    }
    out
}

pub fn predict(cfg: &RunConfig) -> Result<String> {
    let started = Instant::now();
    cfg.check_keys("predict", &allowed(PREDICT_KEYS, vec![]))?;
    let model = PipelineModel::load(existing(cfg.require_path("checkpoint")?, "checkpoint")?)?;
    let data = load_data(cfg)?;
    let samples = match cfg.get("sample") {
        Some(id) => {
            let all: Vec<AlignedSample> = SplitName::ALL
                .iter()
                .flat_map(|s| data.splits.get(*s).to_vec())
                .collect();
            vec![sample_by_id(&all, id)?.clone()]
        }
        None => select_split(cfg, &data, "split", "test")?,
    };
    check_label_kind(&model, &samples)?;
    let preds = predict_all(&model, &samples)?;
    let dir = out_dir(cfg)?;
    fs::write(
        dir.join(PREDICTIONS_FILE),
        prediction_csv(&model, &preds, &samples),
    )?;
    if model.config.use_coattention {
        fs::write(
            dir.join(COATTENTION_FILE),
            coattention_csv(&preds, &samples),
        )?;
    }
    write_manifest(
        &dir,
        "predict",
        cfg,
        json!({ "samples": samples.len() }),
        started,
    )?;
    Ok(format!("predicted {} samples", samples.len()))
}
