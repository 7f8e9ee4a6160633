//! Vector-autoregressive data with a planted Granger-causality graph.
//!
//! Series `k` (a `d`-vector per step) evolves as
//! `x_{k,t} = Σ_{j: adj[k][j]} A_{kj} x_{j,t-lag} + ε`, `ε ~ N(0, σ²)`.
//! Coefficients are shrunk until the companion matrix is stable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{AlignedSample, FeatureStream, LabelKind, LabelTrack, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::gc::GCMatrix;
use crate::nn::tape::sigmoid;
use crate::nn::Tensor;

/// Companion spectral radius the generator shrinks coefficients below.
pub const MAX_SPECTRAL_RADIUS: f64 = 0.97;
/// Multiplicative shrink applied per rescale attempt.
pub const RESCALE_FACTOR: f64 = 0.9;
pub const MAX_RESCALE_ATTEMPTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLabels {
    pub kind: LabelKind,
    /// 1 (valence) or 2 (valence, arousal); ignored for categorical.
    pub channels: usize,
    /// Series whose readout drives valence.
    pub cause: usize,
    /// Slope of the logistic squashing applied to the standardised readout.
    pub gain: f64,
}

impl Default for SyntheticLabels {
    fn default() -> Self {
        Self {
            kind: LabelKind::Continuous,
            channels: 1,
            cause: 0,
            gain: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub p: usize,
    pub d: usize,
    pub t_len: usize,
    /// `adjacency[target][source]`.
    pub adjacency: Vec<Vec<bool>>,
    pub coeff_scale: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub lag: usize,
    /// Simulated steps discarded before the returned window.
    pub burn_in: usize,
    pub labels: SyntheticLabels,
}

impl SyntheticSpec {
    pub fn new(p: usize, d: usize, t_len: usize, adjacency: Vec<Vec<bool>>) -> Self {
        Self {
            p,
            d,
            t_len,
            adjacency,
            coeff_scale: 0.5,
            noise_std: 0.1,
            seed: 0,
            lag: 1,
            burn_in: 100,
            labels: SyntheticLabels::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Gen(m));
        if self.p < 2 || self.d == 0 || self.t_len == 0 || self.lag == 0 {
            return bad(format!(
                "need p >= 2, d >= 1, T >= 1, lag >= 1 (got p={}, d={}, T={}, lag={})",
                self.p, self.d, self.t_len, self.lag
            ));
        }
        if self.adjacency.len() != self.p || self.adjacency.iter().any(|r| r.len() != self.p) {
            return bad(format!("adjacency must be {0}x{0}", self.p));
        }
        if !(self.noise_std >= 0.0) || !self.coeff_scale.is_finite() {
            return bad("noise_std must be >= 0 and coeff_scale finite".into());
        }
        let l = &self.labels;
        if l.cause >= self.p || !(1..=2).contains(&l.channels) {
            return bad("label cause must index a series and channels be 1 or 2".into());
        }
        Ok(())
    }
}

/// Random graph with each off-diagonal edge present with probability
/// `density`; the diagonal is set when `self_loops`.
pub fn random_adjacency(p: usize, density: f64, seed: u64, self_loops: bool) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p)
        .map(|k| {
            (0..p)
                .map(|j| {
                    if k == j {
                        self_loops
                    } else {
                        rng.random::<f64>() < density
                    }
                })
                .collect()
        })
        .collect()
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// Spectral radius by Gelfand's formula `ρ = lim ‖M^n‖^{1/n}` with
/// `n = 2^16`, evaluated by normalised repeated squaring. Slightly
/// overestimates for non-normal matrices.
pub fn spectral_radius(m: &Tensor) -> f64 {
    let n = m.rows();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut cur = m.data().to_vec();
    let s = norm(&cur);
    if s == 0.0 {
        return 0.0;
    }
    cur.iter_mut().for_each(|v| *v /= s);
    let mut log_norm = s.ln();
    const SQUARINGS: i32 = 16;
    for _ in 0..SQUARINGS {
        let sq = matmul(&cur, &cur, n);
        let s = norm(&sq);
        if s == 0.0 {
            return 0.0;
        }
        log_norm = 2.0 * log_norm + s.ln();
        cur = sq.into_iter().map(|v| v / s).collect();
    }
    (log_norm / 2f64.powi(SQUARINGS)).exp()
}

/// A stable VAR process with fixed coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct VarProcess {
    pub p: usize,
    pub d: usize,
    pub lag: usize,
    /// `(p·d) × (p·d)`, block `(k, j)` is `A_{kj}`.
    pub coefficients: Tensor,
    pub adjacency: Vec<Vec<bool>>,
    pub rescale_attempts: usize,
}

impl VarProcess {
    pub fn from_spec(spec: &SyntheticSpec) -> Result<Self> {
        spec.validate()?;
        let (p, d) = (spec.p, spec.d);
        let n = p * d;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut a = vec![0.0; n * n];
        for k in 0..p {
            for j in 0..p {
                if !spec.adjacency[k][j] {
                    continue;
                }
                for r in 0..d {
                    for c in 0..d {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        let mag: f64 = rng.random_range(0.5..1.0);
                        a[(k * d + r) * n + j * d + c] = sign * mag * spec.coeff_scale / d as f64;
                    }
                }
            }
        }
        let mut process = Self {
            p,
            d,
            lag: spec.lag,
            coefficients: Tensor::matrix(n, n, a)?,
            adjacency: spec.adjacency.clone(),
            rescale_attempts: 0,
        };
        loop {
            let rho = spectral_radius(&process.companion());
            if rho.is_finite() && rho < MAX_SPECTRAL_RADIUS {
                return Ok(process);
            }
            if process.rescale_attempts == MAX_RESCALE_ATTEMPTS {
                return Err(Error::Gen(format!(
                    "coefficients still non-stationary (radius {rho:.4}) after {MAX_RESCALE_ATTEMPTS} rescales"
                )));
            }
            process
                .coefficients
                .data_mut()
                .iter_mut()
                .for_each(|v| *v *= RESCALE_FACTOR);
            process.rescale_attempts += 1;
        }
    }

    /// Companion matrix of the lag-`L` recursion over the stacked state
    /// `[x_t; x_{t-1}; ...; x_{t-L+1}]`.
    pub fn companion(&self) -> Tensor {
        let n = self.p * self.d;
        let m = n * self.lag;
        let mut c = vec![0.0; m * m];
        for r in 0..n {
            for col in 0..n {
                c[r * m + (self.lag - 1) * n + col] = self.coefficients.at(r, col);
            }
        }
        for r in n..m {
            c[r * m + (r - n)] = 1.0;
        }
        Tensor::matrix(m, m, c).expect("square")
    }

    /// Ground truth with strengths equal to the Frobenius norms of the
    /// coefficient blocks.
    pub fn ground_truth(&self) -> GCMatrix {
        let n = self.p * self.d;
        let strengths = (0..self.p)
            .map(|k| {
                (0..self.p)
                    .map(|j| {
                        let mut s = 0.0;
                        for r in 0..self.d {
                            for c in 0..self.d {
                                let v =
                                    self.coefficients.data()[(k * self.d + r) * n + j * self.d + c];
                                s += v * v;
                            }
                        }
                        s.sqrt()
                    })
                    .collect()
            })
            .collect();
        GCMatrix {
            strengths,
            adjacency: self.adjacency.clone(),
            epsilon: 0.0,
        }
    }

    /// Simulates `burn_in + t_len` steps and returns the last `t_len` as a
    /// `T × (p·d)` matrix. The first `lag` simulated rows are `N(0, 1)`.
    pub fn simulate(
        &self,
        t_len: usize,
        noise_std: f64,
        burn_in: usize,
        seed: u64,
    ) -> Result<Tensor> {
        let n = self.p * self.d;
        let total = burn_in + t_len;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let noise = Normal::new(0.0, noise_std).map_err(|e| Error::Gen(e.to_string()))?;
        let mut x = vec![0.0; total * n];
        for (t, row) in x.chunks_mut(n).enumerate() {
            if t < self.lag {
                row.iter_mut()
                    .for_each(|v| *v = StandardNormal.sample(&mut rng));
            }
        }
        for t in self.lag..total {
            let (past, rest) = x.split_at_mut(t * n);
            let prev = &past[(t - self.lag) * n..(t - self.lag + 1) * n];
            let cur = &mut rest[..n];
            for (r, out) in cur.iter_mut().enumerate() {
                let row = self.coefficients.row(r);
                *out =
                    row.iter().zip(prev).map(|(a, v)| a * v).sum::<f64>() + noise.sample(&mut rng);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Gen("simulation produced non-finite values".into()));
        }
        Tensor::matrix(t_len, n, x.split_off(burn_in * n))
    }

    /// Simulates one labelled sample; streams are named `f1..fp`.
    pub fn sample(
        &self,
        spec: &SyntheticSpec,
        sample_id: &str,
        seed: u64,
    ) -> Result<AlignedSample> {
        let series = self.simulate(spec.t_len, spec.noise_std, spec.burn_in, seed)?;
        let streams = (0..self.p)
            .map(|k| {
                let mut data = Vec::with_capacity(spec.t_len * self.d);
                for t in 0..spec.t_len {
                    data.extend_from_slice(&series.row(t)[k * self.d..(k + 1) * self.d]);
                }
                FeatureStream::new(
                    k + 1,
                    format!("f{}", k + 1),
                    Tensor::matrix(spec.t_len, self.d, data)?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = synth_labels(&streams, &spec.labels)?;
        AlignedSample::new(sample_id, streams, labels)
    }
}

fn squashed_readout(stream: &FeatureStream, gain: f64) -> Vec<f64> {
    let s: Vec<f64> = (0..stream.len())
        .map(|t| stream.row(t).iter().sum::<f64>() / stream.dim() as f64)
        .collect();
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let std = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    s.iter()
        .map(|v| {
            let z = if std > 0.0 { (v - mean) / std } else { 0.0 };
            sigmoid(gain * z)
        })
        .collect()
}

fn synth_labels(streams: &[FeatureStream], spec: &SyntheticLabels) -> Result<LabelTrack> {
    let valence = squashed_readout(&streams[spec.cause], spec.gain);
    match spec.kind {
        LabelKind::Continuous if spec.channels == 2 => {
            let arousal = squashed_readout(&streams[(spec.cause + 1) % streams.len()], spec.gain);
            let data = valence
                .iter()
                .zip(&arousal)
                .flat_map(|(v, a)| [*v, *a])
                .collect();
            LabelTrack::continuous(Tensor::matrix(valence.len(), 2, data)?)
        }
        LabelKind::Continuous => LabelTrack::continuous(Tensor::matrix(valence.len(), 1, valence)?),
        LabelKind::Categorical => LabelTrack::categorical(
            valence
                .iter()
                .map(|v| ((v * NUM_CLASSES as f64) as usize).min(NUM_CLASSES - 1))
                .collect(),
        ),
    }
}

/// One sample from `spec` plus its ground-truth GC matrix.
pub fn generate_var(spec: &SyntheticSpec) -> Result<(AlignedSample, GCMatrix)> {
    let process = VarProcess::from_spec(spec)?;
    let sample = process.sample(spec, &format!("synth-{}", spec.seed), spec.seed)?;
    Ok((sample, process.ground_truth()))
}
