//! Command-line driver: `synth`, `train`, `eval`, `gc` and `predict`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use affect_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "affect",
    version,
    about = "Multimodal time-series emotion prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Split file; defaults to `splits.csv` in the dataset directory.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Extra `key=value` setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub no_coattention: bool,
    #[arg(long)]
    pub no_gc: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lambda_group: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with a planted causal graph.
    Synth(Common),
    /// Train the pipeline and write a checkpoint and history.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Score a checkpoint on a split.
    Eval(Common),
    /// Report the Granger-causality matrix of a checkpoint, or fit one on raw features.
    Gc(Common),
    /// Write per-timestep predictions and co-attention relevance.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Single sample id; defaults to the whole split.
        #[arg(long)]
        sample: Option<String>,
    },
}

fn overrides(common: &Common) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    let paths = [
        ("out", &common.out),
        ("data", &common.data),
        ("splits", &common.splits),
        ("checkpoint", &common.checkpoint),
    ];
    for (k, v) in paths {
        if let Some(p) = v {
            out.push((k.into(), p.display().to_string()));
        }
    }
    if let Some(s) = common.seed {
        out.push(("seed".into(), s.to_string()));
    }
    Ok(out)
}

/// Runs one parsed command and returns its summary line.
pub fn run(cli: Cli) -> Result<String> {
    let load = |common: &Common, extra: Vec<(String, String)>| -> Result<RunConfig> {
        let mut kv = overrides(common)?;
        kv.extend(extra);
        RunConfig::load(common.config.as_deref(), kv)
    };
    match cli.command {
        Command::Synth(c) => commands::synth(&load(&c, vec![])?),
        Command::Train { common, flags } => {
            let mut extra = Vec::new();
            if flags.no_coattention {
                extra.push(("use_coattention".into(), "false".into()));
            }
            if flags.no_gc {
                extra.push(("use_gc".into(), "false".into()));
            }
            if let Some(e) = flags.epochs {
                extra.push(("epochs".into(), e.to_string()));
            }
            if let Some(lr) = flags.lr {
                extra.push(("lr".into(), lr.to_string()));
            }
            if let Some(l) = flags.lambda_group {
                extra.push(("lambda_group".into(), l.to_string()));
            }
            commands::train_cmd(&load(&common, extra)?)
        }
        Command::Eval(c) => commands::eval(&load(&c, vec![])?),
        Command::Gc(c) => commands::gc(&load(&c, vec![])?),
        Command::Predict { common, sample } => {
            let extra = sample
                .map(|s| vec![("sample".to_string(), s)])
                .unwrap_or_default();
            commands::predict(&load(&common, extra)?)
        }
    }
}

/// One-line diagnostic for a failed run.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace('\n', " ");
    format!("error[{}]: {msg}", e.kind())
}
