use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coattention::{
    build_relevance, co_attention_map, CoAttentionLayer, CoAttentionMap, TapeAttention,
};
use crate::data::{AlignedSample, LabelKind, LabelTrack, NUM_CLASSES};
use crate::error::{shape_err, Error, Result};
use crate::gc::encoder::{encode_on_tape, EncodedVars};
use crate::gc::var::var_loss_on_tape;
use crate::gc::{extract_gc, ClstmEncoder, GCMatrix};
use crate::nn::init::{orthogonal, xavier_uniform};
use crate::nn::lstm::forget_bias;
use crate::nn::{Checkpoint, Dense, ParamId, ParamStore, Tape, Tensor, Var};
use crate::pipeline::config::{PipelineConfig, VarMode};
use crate::pipeline::loss::build_emotion_loss;

/// Inner width of the output head.
pub const HEAD_WIDTH: usize = 4;
/// Tag stored in checkpoint headers.
pub const CHECKPOINT_FORMAT: &str = "affect-pipeline";

/// Unordered modality pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn modality_pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct DecoderIds {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
}

/// Source of the decoder's past-label input.
#[derive(Clone, Copy, Debug)]
pub enum Feedback<'a> {
    /// True labels, shifted by one step.
    Teacher(&'a LabelTrack),
    /// The model's own previous output.
    Predicted,
}

/// Tape values of one forward pass.
#[derive(Clone, Debug)]
pub struct TapeForward {
    /// `inputs[i][t]`: the simplex embedding of modality `i` at `t`.
    pub inputs: Vec<Vec<Var>>,
    pub encoded: EncodedVars,
    pub attention: Vec<TapeAttention>,
    /// Per-timestep gate; empty without co-attention.
    pub gates: Vec<Var>,
    /// Decoder input context `d_t`.
    pub context: Vec<Var>,
    /// Per-timestep outputs (logits for categorical labels).
    pub outputs: Vec<Var>,
}

/// Loss terms of one sample.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub emotion: Var,
    /// Weighted VAR term, when it enters this objective.
    pub var: Option<Var>,
    pub total: Var,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// One map per modality pair, in [`modality_pairs`] order.
    pub coattention: Vec<CoAttentionMap>,
    /// `T × (p·h)`.
    pub h_enc: Tensor,
    /// `T × (p·h)` gate values; absent without co-attention.
    pub gates: Option<Tensor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub sample_id: String,
    /// `T × y_out`; logits for categorical labels.
    pub outputs: Tensor,
    /// Values for continuous labels, argmax classes for categorical ones.
    pub track: LabelTrack,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    config: PipelineConfig,
    modality_dims: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct PipelineModel {
    pub config: PipelineConfig,
    pub modality_dims: Vec<usize>,
    pub store: ParamStore,
    pub phi: Vec<Dense>,
    pub encoder: ClstmEncoder,
    pub pairs: Vec<(usize, usize)>,
    pub coatt: Vec<CoAttentionLayer>,
    pub gate: Dense,
    pub decoder: DecoderIds,
    pub head_hidden: Dense,
    pub head_out: Dense,
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

fn one_hot(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; NUM_CLASSES];
    v[k] = 1.0;
    v
}

fn rows_of(tape: &Tape, vars: &[Var], cols: usize) -> Result<Tensor> {
    let data = vars.iter().flat_map(|v| tape.data(*v).to_vec()).collect();
    Tensor::matrix(vars.len(), cols, data)
}

impl PipelineModel {
    /// Fresh model whose initialisation is determined by `config.seed`.
    pub fn new(config: PipelineConfig, modality_dims: &[usize]) -> Result<Self> {
        config.validate()?;
        build_relevance(&config.relevance)?;
        build_emotion_loss(config.emotion_loss_name(), config.label_kind)?;
        let p = modality_dims.len();
        if p < 2 {
            return Err(Error::Config(format!(
                "need at least 2 modalities, got {p}"
            )));
        }
        if modality_dims.contains(&0) {
            return Err(Error::Config("modality dimensions must be >= 1".into()));
        }
        let (e, h) = (config.embed, config.hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let phi = modality_dims
            .iter()
            .enumerate()
            .map(|(i, &d)| Dense::new(&mut store, &format!("phi.{i}"), d, e, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let encoder = ClstmEncoder::new(&mut store, "enc", p, e, h, &mut rng)?;
        let pairs = modality_pairs(p);
        let coatt = pairs
            .iter()
            .map(|&(i, j)| {
                CoAttentionLayer::new(
                    &mut store,
                    &format!("coatt.{i}_{j}"),
                    e,
                    e,
                    config.attention_width(),
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let gate = Dense::new(&mut store, "gate", pairs.len(), p * h, &mut rng)?;
        let y_dim = config.output_size();
        let (dec_in, hd) = (p * h + y_dim, config.hidden_dec);
        let decoder = DecoderIds {
            w_ih: store.add("dec.w_ih", xavier_uniform(4 * hd, dec_in, &mut rng))?,
            w_hh: store.add("dec.w_hh", orthogonal(4 * hd, hd, &mut rng))?,
            bias: store.add("dec.bias", forget_bias(hd))?,
        };
        let head_hidden = Dense::new(&mut store, "head.0", hd, HEAD_WIDTH, &mut rng)?;
        let head_out = Dense::new(&mut store, "head.1", HEAD_WIDTH, y_dim, &mut rng)?;
        Ok(Self {
            config,
            modality_dims: modality_dims.to_vec(),
            store,
            phi,
            encoder,
            pairs,
            coatt,
            gate,
            decoder,
            head_hidden,
            head_out,
        })
    }

    pub fn num_modalities(&self) -> usize {
        self.modality_dims.len()
    }

    pub fn output_size(&self) -> usize {
        self.config.output_size()
    }

    pub fn check_sample(&self, sample: &AlignedSample) -> Result<()> {
        if sample.modality_dims() != self.modality_dims {
            return shape_err(format!(
                "sample '{}' has modality dims {:?}, model expects {:?}",
                sample.sample_id,
                sample.modality_dims(),
                self.modality_dims
            ));
        }
        if sample.is_empty() {
            return shape_err(format!("sample '{}' is empty", sample.sample_id));
        }
        Ok(())
    }

    fn check_labels(&self, labels: &LabelTrack, t_len: usize) -> Result<()> {
        let ok = match (self.config.label_kind, labels) {
            (LabelKind::Continuous, LabelTrack::Continuous(y)) => {
                y.cols() == self.config.label_channels
            }
            (LabelKind::Categorical, LabelTrack::Categorical(_)) => true,
            _ => false,
        };
        if !ok || labels.len() != t_len {
            return shape_err(format!(
                "labels ({:?}, {} channels, T={}) do not match the model ({:?}, {} channels, T={t_len})",
                labels.kind(),
                labels.channels(),
                labels.len(),
                self.config.label_kind,
                self.config.label_channels
            ));
        }
        Ok(())
    }

    /// Differentiable forward pass over one sample.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        sample: &AlignedSample,
        feedback: Feedback<'_>,
    ) -> Result<TapeForward> {
        self.check_sample(sample)?;
        let t_len = sample.len();
        if let Feedback::Teacher(labels) = feedback {
            self.check_labels(labels, t_len)?;
        }
        let store = &self.store;

        let mut inputs = Vec::with_capacity(self.num_modalities());
        for (phi, stream) in self.phi.iter().zip(&sample.streams) {
            let vars = phi.on_tape(tape, store);
            let mut rows = Vec::with_capacity(t_len);
            for t in 0..t_len {
                let f = tape.constant_vec(stream.row(t).to_vec());
                let z = vars.forward(tape, f)?;
                rows.push(tape.softmax(z));
            }
            inputs.push(rows);
        }
        let stacked: Vec<Var> = (0..t_len)
            .map(|t| {
                let parts: Vec<Var> = inputs.iter().map(|rows| rows[t]).collect();
                tape.concat(&parts)
            })
            .collect();
        let encoded = encode_on_tape(&self.encoder, tape, store, &stacked)?;

        let mut attention = Vec::new();
        let mut gates = Vec::new();
        let context = if self.config.use_coattention {
            let reduction = build_relevance(&self.config.relevance)?;
            for (layer, &(i, j)) in self.coatt.iter().zip(&self.pairs) {
                attention.push(layer.forward(
                    tape,
                    store,
                    &inputs[i],
                    &inputs[j],
                    reduction.as_ref(),
                )?);
            }
            let gate = self.gate.on_tape(tape, store);
            let mut context = Vec::with_capacity(t_len);
            for t in 0..t_len {
                let a = attention
                    .iter()
                    .map(|att| tape.slice(att.relevance, t, 1))
                    .collect::<Result<Vec<_>>>()?;
                let a = tape.concat(&a);
                let z = gate.forward(tape, a)?;
                let g = tape.sigmoid(z);
                gates.push(g);
                context.push(tape.mul(encoded.rows[t], g)?);
            }
            context
        } else {
            encoded.rows.clone()
        };

        let y_dim = self.output_size();
        let hd = self.config.hidden_dec;
        let w_ih = tape.param(store, self.decoder.w_ih);
        let w_hh = tape.param(store, self.decoder.w_hh);
        let bias = tape.param(store, self.decoder.bias);
        let head_hidden = self.head_hidden.on_tape(tape, store);
        let head_out = self.head_out.on_tape(tape, store);
        let mut h = tape.constant_vec(vec![0.0; hd]);
        let mut c = tape.constant_vec(vec![0.0; hd]);
        let mut prev = tape.constant_vec(vec![0.0; y_dim]);
        let mut outputs = Vec::with_capacity(t_len);
        for (t, &d) in context.iter().enumerate() {
            let x = tape.concat(&[d, prev]);
            let hc = tape.lstm_cell(x, h, c, w_ih, w_hh, bias)?;
            h = tape.slice(hc, 0, hd)?;
            c = tape.slice(hc, hd, hd)?;
            let z = head_hidden.forward(tape, h)?;
            let z = tape.relu(z);
            let y = head_out.forward(tape, z)?;
            outputs.push(y);
            prev = match (feedback, self.config.label_kind) {
                (Feedback::Teacher(LabelTrack::Continuous(labels)), _) => {
                    tape.constant_vec(labels.row(t).to_vec())
                }
                (Feedback::Teacher(LabelTrack::Categorical(labels)), _) => {
                    tape.constant_vec(one_hot(labels[t]))
                }
                (Feedback::Predicted, LabelKind::Continuous) => y,
                (Feedback::Predicted, LabelKind::Categorical) => {
                    tape.constant_vec(one_hot(argmax(tape.data(y))))
                }
            };
        }
        Ok(TapeForward {
            inputs,
            encoded,
            attention,
            gates,
            context,
            outputs,
        })
    }

    /// Whether the VAR objective is part of the per-sample training loss.
    pub fn joint_var(&self) -> bool {
        self.config.use_gc && self.config.var_mode == VarMode::Joint && self.config.var_weight > 0.0
    }

    /// Stacked simplex embeddings as a detached `T × (p·E)` matrix.
    pub fn stacked_inputs(&self, tape: &Tape, fwd: &TapeForward) -> Result<Tensor> {
        let t_len = fwd.outputs.len();
        let width = self.num_modalities() * self.config.embed;
        let mut data = Vec::with_capacity(t_len * width);
        for t in 0..t_len {
            for rows in &fwd.inputs {
                data.extend_from_slice(tape.data(rows[t]));
            }
        }
        Tensor::matrix(t_len, width, data)
    }

    /// Emotion loss, plus the weighted VAR term in joint mode.
    pub fn loss_on_tape(
        &self,
        tape: &mut Tape,
        fwd: &TapeForward,
        labels: &LabelTrack,
    ) -> Result<LossVars> {
        self.check_labels(labels, fwd.outputs.len())?;
        let loss = build_emotion_loss(self.config.emotion_loss_name(), self.config.label_kind)?;
        let emotion = loss.on_tape(tape, &fwd.outputs, labels)?;
        if !self.joint_var() || fwd.outputs.len() < 2 {
            return Ok(LossVars {
                emotion,
                var: None,
                total: emotion,
            });
        }
        let targets = self.stacked_inputs(tape, fwd)?;
        let var = var_loss_on_tape(
            &self.encoder,
            tape,
            &fwd.encoded,
            &targets,
            self.config.ridge,
        )?;
        let var = tape.scale(var, self.config.var_weight);
        let total = tape.add(emotion, var)?;
        Ok(LossVars {
            emotion,
            var: Some(var),
            total,
        })
    }

    /// Emotion loss of a `T × y_out` output matrix.
    pub fn loss(&self, y_hat: &Tensor, labels: &LabelTrack) -> Result<f64> {
        self.check_labels(labels, y_hat.rows())?;
        if y_hat.cols() != self.output_size() {
            return shape_err(format!(
                "outputs are {} wide, model emits {}",
                y_hat.cols(),
                self.output_size()
            ));
        }
        build_emotion_loss(self.config.emotion_loss_name(), self.config.label_kind)?
            .value(y_hat, labels)
    }

    /// Outputs and diagnostics, teacher-forced when `labels_for_forcing` is
    /// given and autoregressive otherwise.
    pub fn forward(
        &self,
        sample: &AlignedSample,
        labels_for_forcing: Option<&LabelTrack>,
    ) -> Result<(Tensor, Diagnostics)> {
        let mut tape = Tape::new();
        let feedback = labels_for_forcing.map_or(Feedback::Predicted, Feedback::Teacher);
        let fwd = self.forward_on_tape(&mut tape, sample, feedback)?;
        let outputs = rows_of(&tape, &fwd.outputs, self.output_size())?;
        let width = self.encoder.output_size();
        let h_enc = rows_of(&tape, &fwd.encoded.rows, width)?;
        let gates = if fwd.gates.is_empty() {
            None
        } else {
            Some(rows_of(&tape, &fwd.gates, width)?)
        };
        let mut coattention = Vec::new();
        if self.config.use_coattention {
            let reduction = build_relevance(&self.config.relevance)?;
            let e = self.config.embed;
            for (layer, &(i, j)) in self.coatt.iter().zip(&self.pairs) {
                let u_p = rows_of(&tape, &fwd.inputs[i], e)?;
                let u_q = rows_of(&tape, &fwd.inputs[j], e)?;
                coattention.push(co_attention_map(
                    (i, j),
                    &u_p,
                    &u_q,
                    &layer.params(&self.store),
                    reduction.as_ref(),
                )?);
            }
        }
        Ok((
            outputs,
            Diagnostics {
                coattention,
                h_enc,
                gates,
            },
        ))
    }

    /// Autoregressive inference.
    pub fn predict(&self, sample: &AlignedSample) -> Result<Prediction> {
        let (outputs, diagnostics) = self.forward(sample, None)?;
        let track = match self.config.label_kind {
            LabelKind::Continuous => LabelTrack::continuous(outputs.clone()).map_err(|_| {
                Error::Divergence(format!(
                    "non-finite prediction for sample '{}'",
                    sample.sample_id
                ))
            })?,
            LabelKind::Categorical => LabelTrack::categorical(
                (0..outputs.rows())
                    .map(|t| argmax(outputs.row(t)))
                    .collect(),
            )?,
        };
        Ok(Prediction {
            sample_id: sample.sample_id.clone(),
            outputs,
            track,
            diagnostics,
        })
    }

    /// Granger-causality estimate read from the encoder's input blocks.
    pub fn granger_causality(&self, epsilon: f64) -> Result<GCMatrix> {
        extract_gc(&self.encoder, &self.store, epsilon)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            config: self.config.clone(),
            modality_dims: self.modality_dims.clone(),
        };
        let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        Ok(Checkpoint::from_store(&self.store, json))
    }

    /// Rebuilds the architecture from the checkpoint header, then loads the
    /// parameter values.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let header: CheckpointHeader = serde_json::from_str(&ckpt.config)
            .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!(
                "checkpoint format '{}' is not {CHECKPOINT_FORMAT}",
                header.format
            )));
        }
        let mut model = Self::new(header.config, &header.modality_dims)?;
        if ckpt.params.len() != model.store.len() {
            return Err(Error::Format(format!(
                "checkpoint holds {} parameters, model has {}",
                ckpt.params.len(),
                model.store.len()
            )));
        }
        ckpt.apply_to(&mut model.store)?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureStream;
    use rand::Rng;

    fn sample(dims: &[usize], t_len: usize, channels: usize, seed: u64) -> AlignedSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rand_t = |r: usize, c: usize| {
            let data = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
            Tensor::matrix(r, c, data).unwrap()
        };
        let streams = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                FeatureStream::new(i + 1, format!("f{}", i + 1), rand_t(t_len, d)).unwrap()
            })
            .collect();
        let labels = LabelTrack::continuous(rand_t(t_len, channels)).unwrap();
        AlignedSample::new("s", streams, labels).unwrap()
    }

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            embed: 3,
            hidden: 4,
            hidden_dec: 4,
            ..Default::default()
        }
    }

    #[test]
    fn pairs_are_lexicographic() {
        assert_eq!(modality_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(modality_pairs(4).len(), 6);
    }

    #[test]
    fn shapes_and_diagnostics() {
        let s = sample(&[2, 3, 1], 6, 2, 1);
        let model = PipelineModel::new(
            PipelineConfig {
                label_channels: 2,
                ..small_config()
            },
            &s.modality_dims(),
        )
        .unwrap();
        assert_eq!(model.coatt.len(), 3);
        let pred = model.predict(&s).unwrap();
        assert_eq!(pred.outputs.shape(), &[6, 2]);
        assert_eq!(pred.diagnostics.h_enc.shape(), &[6, 12]);
        assert_eq!(pred.diagnostics.coattention.len(), 3);
        let gates = pred.diagnostics.gates.unwrap();
        assert!(gates.data().iter().all(|g| *g > 0.0 && *g < 1.0));
        assert_eq!(model.predict(&s).unwrap().outputs, pred.outputs);
    }

    #[test]
    fn modality_mismatch_is_shape_error() {
        let model = PipelineModel::new(small_config(), &[2, 3]).unwrap();
        let err = model.predict(&sample(&[2, 2], 4, 1, 2)).unwrap_err();
        assert_eq!(err.kind(), "shape");
        let err = model.predict(&sample(&[2, 3, 1], 4, 1, 2)).unwrap_err();
        assert_eq!(err.kind(), "shape");
    }

    #[test]
    fn zero_gate_weights_halve_the_encoding() {
        let s = sample(&[2, 2], 5, 1, 3);
        let mut model = PipelineModel::new(small_config(), &s.modality_dims()).unwrap();
        model.store.value_mut(model.gate.weight).fill(0.0);
        let (_, diag) = model.forward(&s, None).unwrap();
        assert!(diag.gates.unwrap().data().iter().all(|g| *g == 0.5));
        let mut tape = Tape::new();
        let fwd = model
            .forward_on_tape(&mut tape, &s, Feedback::Predicted)
            .unwrap();
        for t in 0..5 {
            let h = tape.data(fwd.encoded.rows[t]);
            let d = tape.data(fwd.context[t]);
            assert!(h.iter().zip(d).all(|(h, d)| *d == h * 0.5));
        }
    }

    #[test]
    fn without_coattention_outputs_ignore_attention_params() {
        let s = sample(&[2, 3], 5, 1, 4);
        let mut model = PipelineModel::new(
            PipelineConfig {
                use_coattention: false,
                ..small_config()
            },
            &s.modality_dims(),
        )
        .unwrap();
        let before = model.predict(&s).unwrap();
        assert!(before.diagnostics.gates.is_none());
        for layer in model.coatt.clone() {
            model.store.value_mut(layer.w_p).fill(7.0);
            model.store.value_mut(layer.w_alpha).fill(-3.0);
        }
        model.store.value_mut(model.gate.weight).fill(5.0);
        assert_eq!(model.predict(&s).unwrap().outputs, before.outputs);
    }

    #[test]
    fn single_step_and_constant_head() {
        let s = sample(&[2, 2], 1, 1, 5);
        let mut model = PipelineModel::new(small_config(), &s.modality_dims()).unwrap();
        assert_eq!(model.predict(&s).unwrap().outputs.shape(), &[1, 1]);
        let s = sample(&[2, 2], 6, 1, 5);
        model.store.value_mut(model.head_out.weight).fill(0.0);
        model.store.value_mut(model.head_out.bias).fill(0.25);
        let out = model.predict(&s).unwrap().outputs;
        assert!(out.data().iter().all(|v| *v == 0.25));
    }

    #[test]
    fn teacher_forcing_matches_autoregression_at_fixed_point() {
        let s = sample(&[2, 2], 6, 1, 6);
        let mut model = PipelineModel::new(small_config(), &s.modality_dims()).unwrap();
        model.store.value_mut(model.head_out.weight).fill(0.0);
        model.store.value_mut(model.head_out.bias).fill(0.4);
        let labels = LabelTrack::continuous(Tensor::matrix(6, 1, vec![0.4; 6]).unwrap()).unwrap();
        let (forced, _) = model.forward(&s, Some(&labels)).unwrap();
        let (free, _) = model.forward(&s, None).unwrap();
        assert_eq!(forced, free);
        assert_eq!(model.loss(&free, &labels).unwrap(), 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let s = sample(&[2, 3], 4, 1, 7);
        let model = PipelineModel::new(small_config(), &s.modality_dims()).unwrap();
        let back = PipelineModel::from_checkpoint(
            &Checkpoint::from_bytes(&model.to_checkpoint().unwrap().to_bytes()).unwrap(),
        )
        .unwrap();
        assert_eq!(back.config, model.config);
        assert_eq!(back.predict(&s).unwrap(), model.predict(&s).unwrap());
        let bad = Checkpoint::from_store(&model.store, "{}");
        assert_eq!(
            PipelineModel::from_checkpoint(&bad).unwrap_err().kind(),
            "format"
        );
    }

    #[test]
    fn categorical_outputs_are_logits_with_argmax() {
        let mut s = sample(&[2, 2], 5, 1, 8);
        s.labels = LabelTrack::categorical(vec![1, 2, 26, 0, 5]).unwrap();
        let model = PipelineModel::new(
            PipelineConfig {
                label_kind: LabelKind::Categorical,
                ..small_config()
            },
            &s.modality_dims(),
        )
        .unwrap();
        let pred = model.predict(&s).unwrap();
        assert_eq!(pred.outputs.shape(), &[5, 27]);
        let LabelTrack::Categorical(classes) = &pred.track else {
            panic!()
        };
        for (t, k) in classes.iter().enumerate() {
            assert_eq!(*k, argmax(pred.outputs.row(t)));
        }
        let mut tape = Tape::new();
        let fwd = model
            .forward_on_tape(&mut tape, &s, Feedback::Teacher(&s.labels))
            .unwrap();
        let loss = model.loss_on_tape(&mut tape, &fwd, &s.labels).unwrap();
        assert!(tape.scalar(loss.total).is_finite());
    }
}
