//! Emotion losses over a predicted track.

use std::sync::OnceLock;

use crate::data::{LabelKind, LabelTrack};
use crate::error::{shape_err, Error, Result};
use crate::nn::{Tape, Tensor, Var};
use crate::registry::Registry;

pub trait EmotionLoss: Send + Sync {
    fn name(&self) -> &'static str;
    fn supports(&self, kind: LabelKind) -> bool;
    /// Differentiable loss over per-timestep outputs.
    fn on_tape(&self, tape: &mut Tape, outputs: &[Var], labels: &LabelTrack) -> Result<Var>;
    /// The same loss on a `T × y_out` output matrix.
    fn value(&self, outputs: &Tensor, labels: &LabelTrack) -> Result<f64> {
        let mut tape = Tape::new();
        let rows: Vec<Var> = (0..outputs.rows())
            .map(|t| tape.constant_vec(outputs.row(t).to_vec()))
            .collect();
        let loss = self.on_tape(&mut tape, &rows, labels)?;
        Ok(tape.scalar(loss))
    }
}

fn continuous_labels<'a>(
    name: &str,
    outputs: &[Var],
    tape: &Tape,
    labels: &'a LabelTrack,
) -> Result<&'a Tensor> {
    let LabelTrack::Continuous(y) = labels else {
        return Err(Error::Config(format!(
            "{name} loss needs continuous labels"
        )));
    };
    if outputs.len() != y.rows() || outputs.iter().any(|v| tape.data(*v).len() != y.cols()) {
        return shape_err(format!(
            "{name}: outputs do not match {:?} labels",
            y.shape()
        ));
    }
    Ok(y)
}

/// Mean squared error over timesteps and channels.
pub struct MseLoss;

impl EmotionLoss for MseLoss {
    fn name(&self) -> &'static str {
        "mse"
    }
    fn supports(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Continuous
    }
    fn on_tape(&self, tape: &mut Tape, outputs: &[Var], labels: &LabelTrack) -> Result<Var> {
        let y = continuous_labels(self.name(), outputs, tape, labels)?;
        let mut terms = Vec::with_capacity(outputs.len());
        for (t, &out) in outputs.iter().enumerate() {
            let target = tape.constant_vec(y.row(t).to_vec());
            let diff = tape.sub(out, target)?;
            terms.push(tape.sum_squares(diff));
        }
        let total = tape.add_n(&terms)?;
        Ok(tape.scale(total, 1.0 / y.len() as f64))
    }
}

/// `1 − CCC`, averaged over channels.
pub struct CccLoss;

impl EmotionLoss for CccLoss {
    fn name(&self) -> &'static str {
        "ccc"
    }
    fn supports(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Continuous
    }
    fn on_tape(&self, tape: &mut Tape, outputs: &[Var], labels: &LabelTrack) -> Result<Var> {
        let y = continuous_labels(self.name(), outputs, tape, labels)?;
        let n = y.rows() as f64;
        let mut per_channel = Vec::with_capacity(y.cols());
        for c in 0..y.cols() {
            let col: Vec<f64> = (0..y.rows()).map(|t| y.at(t, c)).collect();
            let mu_y = col.iter().sum::<f64>() / n;
            let var_y = col.iter().map(|v| (v - mu_y).powi(2)).sum::<f64>() / n;
            let centered_y = tape.constant_vec(col.iter().map(|v| v - mu_y).collect());
            let parts = outputs
                .iter()
                .map(|&o| tape.slice(o, c, 1))
                .collect::<Result<Vec<_>>>()?;
            let y_hat = tape.concat(&parts);
            let mu_hat = tape.mean(y_hat);
            let neg_mu = tape.scale(mu_hat, -1.0);
            let centered = tape.add_scalar(y_hat, neg_mu)?;
            let ss = tape.sum_squares(centered);
            let var_hat = tape.scale(ss, 1.0 / n);
            let cross = tape.dot(centered, centered_y)?;
            let cov2 = tape.scale(cross, 2.0 / n);
            let gap = tape.add_const(mu_hat, -mu_y);
            let gap_sq = tape.sum_squares(gap);
            let spread = tape.add_n(&[var_hat, gap_sq])?;
            let denom = tape.add_const(spread, var_y);
            let ccc = tape.div(cov2, denom)?;
            let neg = tape.scale(ccc, -1.0);
            per_channel.push(tape.add_const(neg, 1.0));
        }
        let total = tape.add_n(&per_channel)?;
        Ok(tape.scale(total, 1.0 / y.cols() as f64))
    }
}

/// Mean softmax cross-entropy of per-timestep logits.
pub struct CrossEntropyLoss;

impl EmotionLoss for CrossEntropyLoss {
    fn name(&self) -> &'static str {
        "cross_entropy"
    }
    fn supports(&self, kind: LabelKind) -> bool {
        kind == LabelKind::Categorical
    }
    fn on_tape(&self, tape: &mut Tape, outputs: &[Var], labels: &LabelTrack) -> Result<Var> {
        let LabelTrack::Categorical(classes) = labels else {
            return Err(Error::Config(
                "cross_entropy loss needs categorical labels".into(),
            ));
        };
        if outputs.len() != classes.len() {
            return shape_err(format!(
                "cross_entropy: {} outputs for {} labels",
                outputs.len(),
                classes.len()
            ));
        }
        let terms = outputs
            .iter()
            .zip(classes)
            .map(|(&o, &k)| tape.cross_entropy(o, k))
            .collect::<Result<Vec<_>>>()?;
        let total = tape.add_n(&terms)?;
        Ok(tape.scale(total, 1.0 / classes.len() as f64))
    }
}

pub type EmotionLossCtor = fn() -> Box<dyn EmotionLoss>;

pub fn emotion_losses() -> &'static Registry<EmotionLossCtor> {
    static REG: OnceLock<Registry<EmotionLossCtor>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<EmotionLossCtor> = Registry::new("emotion loss");
        reg.register("mse", || Box::new(MseLoss))
            .register("ccc", || Box::new(CccLoss))
            .register("cross_entropy", || Box::new(CrossEntropyLoss));
        reg
    })
}

/// Looks up `name` and checks it supports `kind`.
pub fn build_emotion_loss(name: &str, kind: LabelKind) -> Result<Box<dyn EmotionLoss>> {
    let loss = emotion_losses().get(name)?();
    if !loss.supports(kind) {
        return Err(Error::Config(format!(
            "emotion loss '{name}' does not support {kind:?} labels"
        )));
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ccc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn track(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    #[test]
    fn mse_zero_on_labels_and_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = track(7, 2, &mut rng);
        let labels = LabelTrack::continuous(y.clone()).unwrap();
        assert_eq!(MseLoss.value(&y, &labels).unwrap(), 0.0);
        let y_hat = track(7, 2, &mut rng);
        let naive: f64 = y
            .data()
            .iter()
            .zip(y_hat.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 14.0;
        assert!((MseLoss.value(&y_hat, &labels).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn ccc_loss_is_one_minus_mean_channel_ccc() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = track(9, 2, &mut rng);
        let y_hat = track(9, 2, &mut rng);
        let col = |t: &Tensor, c: usize| (0..9).map(|r| t.at(r, c)).collect::<Vec<_>>();
        let expect = 1.0
            - (ccc(&col(&y, 0), &col(&y_hat, 0)).unwrap()
                + ccc(&col(&y, 1), &col(&y_hat, 1)).unwrap())
                / 2.0;
        let got = CccLoss
            .value(&y_hat, &LabelTrack::continuous(y).unwrap())
            .unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn uniform_logits_cost_ln_27() {
        let logits = Tensor::zeros(&[5, 27]);
        let labels = LabelTrack::categorical(vec![0, 3, 26, 9, 9]).unwrap();
        let got = CrossEntropyLoss.value(&logits, &labels).unwrap();
        assert!((got - 27f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn registry_checks_label_kind() {
        assert!(build_emotion_loss("mse", LabelKind::Continuous).is_ok());
        assert_eq!(
            build_emotion_loss("mse", LabelKind::Categorical)
                .err()
                .unwrap()
                .kind(),
            "config"
        );
        assert_eq!(
            build_emotion_loss("hinge", LabelKind::Continuous)
                .err()
                .unwrap()
                .kind(),
            "config"
        );
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let labels = LabelTrack::continuous(Tensor::zeros(&[4, 1])).unwrap();
        assert_eq!(
            MseLoss
                .value(&Tensor::zeros(&[3, 1]), &labels)
                .unwrap_err()
                .kind(),
            "shape"
        );
        assert_eq!(
            MseLoss
                .value(&Tensor::zeros(&[4, 2]), &labels)
                .unwrap_err()
                .kind(),
            "shape"
        );
    }
}
