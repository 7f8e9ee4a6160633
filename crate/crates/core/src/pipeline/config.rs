use serde::{Deserialize, Serialize};

use crate::data::{LabelKind, NUM_CLASSES};
use crate::error::{Error, Result};

/// How the encoder's VAR objective enters training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarMode {
    /// `var_weight · var_loss` is added to every emotion step.
    Joint,
    /// A separate VAR gradient step with `lr_var` follows each emotion step.
    Alternating,
}

impl std::str::FromStr for VarMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(VarMode::Joint),
            "alternating" => Ok(VarMode::Alternating),
            other => Err(Error::Config(format!(
                "unknown var_mode '{other}' (known: joint, alternating)"
            ))),
        }
    }
}

/// Marker for settings resolved from the label kind.
pub const AUTO: &str = "auto";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Embedding width E of every modality.
    pub embed: usize,
    /// Hidden width h of each encoder component.
    pub hidden: usize,
    pub hidden_dec: usize,
    pub label_kind: LabelKind,
    /// 1 (valence) or 2 (valence, arousal); ignored for categorical labels.
    pub label_channels: usize,
    pub use_coattention: bool,
    pub use_gc: bool,
    /// Feed true past labels to the decoder during training.
    pub teacher_forcing: bool,
    pub var_weight: f64,
    pub var_mode: VarMode,
    pub optimizer: String,
    pub lr: f64,
    pub lr_var: f64,
    pub lambda_group: f64,
    pub ridge: f64,
    /// Emotion loss name, or `auto` for mse / cross_entropy by label kind.
    pub emotion_loss: String,
    pub relevance: String,
    /// Co-attention projection width; 0 means `embed`.
    pub attention_width: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Model-selection metric, or `auto` for mse / top1_accuracy.
    pub val_metric: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            embed: 4,
            hidden: 8,
            hidden_dec: 32,
            label_kind: LabelKind::Continuous,
            label_channels: 1,
            use_coattention: true,
            use_gc: true,
            teacher_forcing: true,
            var_weight: 0.01,
            var_mode: VarMode::Joint,
            optimizer: "adam".into(),
            lr: 1e-2,
            lr_var: 1e-3,
            lambda_group: 1e-3,
            ridge: 1e-4,
            emotion_loss: AUTO.into(),
            relevance: "column_mean".into(),
            attention_width: 0,
            epochs: 100,
            seed: 0,
            val_metric: AUTO.into(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.embed == 0 || self.hidden == 0 || self.hidden_dec == 0 {
            return bad("embed, hidden and hidden_dec must be >= 1".into());
        }
        if self.label_kind == LabelKind::Continuous && !(1..=2).contains(&self.label_channels) {
            return bad(format!(
                "label_channels must be 1 or 2, got {}",
                self.label_channels
            ));
        }
        for (name, v) in [("lr", self.lr), ("lr_var", self.lr_var)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("var_weight", self.var_weight),
            ("lambda_group", self.lambda_group),
            ("ridge", self.ridge),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Width of each prediction: label channels, or one logit per class.
    pub fn output_size(&self) -> usize {
        match self.label_kind {
            LabelKind::Continuous => self.label_channels,
            LabelKind::Categorical => NUM_CLASSES,
        }
    }

    pub fn attention_width(&self) -> usize {
        if self.attention_width == 0 {
            self.embed
        } else {
            self.attention_width
        }
    }

    pub fn emotion_loss_name(&self) -> &str {
        match (self.emotion_loss.as_str(), self.label_kind) {
            (AUTO, LabelKind::Continuous) => "mse",
            (AUTO, LabelKind::Categorical) => "cross_entropy",
            (name, _) => name,
        }
    }

    pub fn val_metric_name(&self) -> &str {
        match (self.val_metric.as_str(), self.label_kind) {
            (AUTO, LabelKind::Continuous) => "mse",
            (AUTO, LabelKind::Categorical) => "top1_accuracy",
            (name, _) => name,
        }
    }
}
