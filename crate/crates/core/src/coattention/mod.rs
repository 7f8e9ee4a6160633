//! Pairwise co-attention between two modality sequences.
//!
//! For inputs `u_p, u_q` (both `T` rows) the block computes
//!
//! * `S[i][j] = tanh(W_p u_p^i) · tanh(W_q u_q^j)` (diagnostic only),
//! * `z[i][j] = tanh([W_p u_p^i ; W_q u_q^j])`, `α[i] = softmax_j(w_α · z[i][j])`,
//! * `û^j = Σ_i α[i][j] u_p^i`,
//! * a per-timestep relevance vector reduced from `α`.
//!
//! Because `tanh` acts elementwise on the concatenation, the logit splits
//! as `w_α[..a]·tanh(W_p u_p^i) + w_α[a..]·tanh(W_q u_q^j)`. The first term
//! is constant along the softmax axis, so every row of `α` is the same
//! distribution over `j` and `u_p` does not influence `α`.

mod relevance;

use rand::Rng;

use crate::error::{shape_err, Result};
use crate::nn::init::xavier_uniform;
use crate::nn::tape::softmax;
use crate::nn::tensor::matvec;
use crate::nn::{ParamId, ParamStore, Tape, Tensor, Var};

pub use relevance::{
    build_relevance, relevance, relevance_reductions, ColumnMean, Diagonal, RelevanceReduction,
};

/// Owned co-attention weights: `w_p: a×d_p`, `w_q: a×d_q`, `w_alpha: 2a`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoAttentionParams {
    pub w_p: Tensor,
    pub w_q: Tensor,
    pub w_alpha: Tensor,
}

impl CoAttentionParams {
    pub fn new(w_p: Tensor, w_q: Tensor, w_alpha: Tensor) -> Result<Self> {
        let a = w_p.rows();
        if a == 0
            || w_p.shape().len() != 2
            || w_q.shape().len() != 2
            || w_q.rows() != a
            || w_alpha.len() != 2 * a
        {
            return shape_err(format!(
                "co-attention weights inconsistent: w_p {:?}, w_q {:?}, w_alpha {:?}",
                w_p.shape(),
                w_q.shape(),
                w_alpha.shape()
            ));
        }
        Ok(Self { w_p, w_q, w_alpha })
    }

    pub fn init<R: Rng + ?Sized>(d_p: usize, d_q: usize, width: usize, rng: &mut R) -> Self {
        Self {
            w_p: xavier_uniform(width, d_p, rng),
            w_q: xavier_uniform(width, d_q, rng),
            w_alpha: Tensor::vector(xavier_uniform(1, 2 * width, rng).into_data()),
        }
    }

    pub fn width(&self) -> usize {
        self.w_p.rows()
    }
}

/// Attention output for one modality pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CoAttentionMap {
    pub pair: (usize, usize),
    /// `T × T` soft alignment.
    pub s: Tensor,
    /// `T × T`, row-stochastic.
    pub alpha: Tensor,
    pub relevance: Vec<f64>,
}

fn check_inputs(u_p: &Tensor, u_q: &Tensor, params: &CoAttentionParams) -> Result<()> {
    if u_p.rows() != u_q.rows() {
        return shape_err(format!(
            "co-attention: T mismatch {} vs {}",
            u_p.rows(),
            u_q.rows()
        ));
    }
    if u_p.cols() != params.w_p.cols() || u_q.cols() != params.w_q.cols() {
        return shape_err(format!(
            "co-attention: inputs {}/{} wide, weights expect {}/{}",
            u_p.cols(),
            u_q.cols(),
            params.w_p.cols(),
            params.w_q.cols()
        ));
    }
    Ok(())
}

/// Row `t` of `tanh(W u)` for every timestep, as a `T × a` matrix.
fn projected(u: &Tensor, w: &Tensor) -> Tensor {
    let a = w.rows();
    let mut out = Tensor::zeros(&[u.rows(), a]);
    for t in 0..u.rows() {
        let row = out.row_mut(t);
        matvec(w.data(), a, w.cols(), u.row(t), None, row);
        row.iter_mut().for_each(|v| *v = v.tanh());
    }
    out
}

pub fn soft_alignment(u_p: &Tensor, u_q: &Tensor, params: &CoAttentionParams) -> Result<Tensor> {
    check_inputs(u_p, u_q, params)?;
    let (pp, pq) = (projected(u_p, &params.w_p), projected(u_q, &params.w_q));
    let t_len = u_p.rows();
    let mut s = Tensor::zeros(&[t_len, t_len]);
    for i in 0..t_len {
        for j in 0..t_len {
            s.row_mut(i)[j] = pp.row(i).iter().zip(pq.row(j)).map(|(x, y)| x * y).sum();
        }
    }
    Ok(s)
}

/// Attention logits `l[i][j] = w_α · z[i][j]`.
pub fn attention_logits(u_p: &Tensor, u_q: &Tensor, params: &CoAttentionParams) -> Result<Tensor> {
    check_inputs(u_p, u_q, params)?;
    let a = params.width();
    let (wa_p, wa_q) = params.w_alpha.data().split_at(a);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let (pp, pq) = (projected(u_p, &params.w_p), projected(u_q, &params.w_q));
    let t_len = u_p.rows();
    let sp: Vec<f64> = (0..t_len).map(|i| dot(wa_p, pp.row(i))).collect();
    let sq: Vec<f64> = (0..t_len).map(|j| dot(wa_q, pq.row(j))).collect();
    let mut l = Tensor::zeros(&[t_len, t_len]);
    for i in 0..t_len {
        for j in 0..t_len {
            l.row_mut(i)[j] = sp[i] + sq[j];
        }
    }
    Ok(l)
}

/// `α`, normalised over `j` for each `i`.
pub fn attention_distribution(
    u_p: &Tensor,
    u_q: &Tensor,
    params: &CoAttentionParams,
) -> Result<Tensor> {
    let mut l = attention_logits(u_p, u_q, params)?;
    for i in 0..l.rows() {
        let row = softmax(l.row(i));
        l.row_mut(i).copy_from_slice(&row);
    }
    Ok(l)
}

/// `û^j = Σ_i α[i][j] u_p^i`.
pub fn attend(alpha: &Tensor, u_p: &Tensor) -> Result<Tensor> {
    let t_len = u_p.rows();
    if alpha.shape() != [t_len, t_len] {
        return shape_err(format!(
            "attend: alpha {:?} vs {t_len} timesteps",
            alpha.shape()
        ));
    }
    let d = u_p.cols();
    let mut out = Tensor::zeros(&[t_len, d]);
    for i in 0..t_len {
        for j in 0..t_len {
            let w = alpha.at(i, j);
            for (o, v) in out.row_mut(j).iter_mut().zip(u_p.row(i)) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

/// Full evaluation for one pair.
pub fn co_attention_map(
    pair: (usize, usize),
    u_p: &Tensor,
    u_q: &Tensor,
    params: &CoAttentionParams,
    reduction: &dyn RelevanceReduction,
) -> Result<CoAttentionMap> {
    let s = soft_alignment(u_p, u_q, params)?;
    let alpha = attention_distribution(u_p, u_q, params)?;
    let relevance = reduction.reduce(&alpha);
    Ok(CoAttentionMap {
        pair,
        s,
        alpha,
        relevance,
    })
}

/// Co-attention weights registered in a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct CoAttentionLayer {
    pub w_p: ParamId,
    pub w_q: ParamId,
    pub w_alpha: ParamId,
}

/// Tape outputs of [`CoAttentionLayer::forward`].
#[derive(Clone, Debug)]
pub struct TapeAttention {
    /// Row `i` of `α`, each of length `T`.
    pub alpha_rows: Vec<Var>,
    pub relevance: Var,
}

impl CoAttentionLayer {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        d_p: usize,
        d_q: usize,
        width: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let init = CoAttentionParams::init(d_p, d_q, width, rng);
        Ok(Self {
            w_p: store.add(format!("{name}.w_p"), init.w_p)?,
            w_q: store.add(format!("{name}.w_q"), init.w_q)?,
            w_alpha: store.add(format!("{name}.w_alpha"), init.w_alpha)?,
        })
    }

    pub fn params(&self, store: &ParamStore) -> CoAttentionParams {
        CoAttentionParams {
            w_p: store.value(self.w_p).clone(),
            w_q: store.value(self.w_q).clone(),
            w_alpha: store.value(self.w_alpha).clone(),
        }
    }

    /// Differentiable `α` and relevance from per-timestep input rows.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        u_p: &[Var],
        u_q: &[Var],
        reduction: &dyn RelevanceReduction,
    ) -> Result<TapeAttention> {
        if u_p.len() != u_q.len() || u_p.is_empty() {
            return shape_err(format!(
                "co-attention: T mismatch {} vs {}",
                u_p.len(),
                u_q.len()
            ));
        }
        let a = store.value(self.w_p).rows();
        let w_p = tape.param(store, self.w_p);
        let w_q = tape.param(store, self.w_q);
        let w_alpha = tape.param(store, self.w_alpha);
        let wa_p = tape.slice(w_alpha, 0, a)?;
        let wa_q = tape.slice(w_alpha, a, a)?;
        let mut q_terms = Vec::with_capacity(u_q.len());
        for &u in u_q {
            let z = tape.linear(w_q, u, None)?;
            let z = tape.tanh(z);
            q_terms.push(tape.dot(wa_q, z)?);
        }
        let q_logits = tape.concat(&q_terms);
        let mut alpha_rows = Vec::with_capacity(u_p.len());
        for &u in u_p {
            let z = tape.linear(w_p, u, None)?;
            let z = tape.tanh(z);
            let s_i = tape.dot(wa_p, z)?;
            let logits = tape.add_scalar(q_logits, s_i)?;
            alpha_rows.push(tape.softmax(logits));
        }
        let relevance = reduction.reduce_on_tape(tape, &alpha_rows)?;
        Ok(TapeAttention {
            alpha_rows,
            relevance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        Tensor::matrix(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_row_annihilates_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = CoAttentionParams::init(2, 3, 2, &mut rng);
        let mut u_p = random(4, 2, &mut rng);
        u_p.row_mut(2).fill(0.0);
        let s = soft_alignment(&u_p, &random(4, 3, &mut rng), &params).unwrap();
        assert!(s.row(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn self_alignment_symmetric_with_nonnegative_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = xavier_uniform(3, 2, &mut rng);
        let params = CoAttentionParams::new(w.clone(), w, Tensor::zeros(&[6])).unwrap();
        let u = random(5, 2, &mut rng);
        let s = soft_alignment(&u, &u, &params).unwrap();
        for i in 0..5 {
            assert!(s.at(i, i) >= 0.0);
            for j in 0..5 {
                assert_eq!(s.at(i, j), s.at(j, i));
            }
        }
    }

    #[test]
    fn zero_w_alpha_gives_uniform_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = CoAttentionParams::init(2, 2, 3, &mut rng);
        params.w_alpha.fill(0.0);
        let alpha =
            attention_distribution(&random(4, 2, &mut rng), &random(4, 2, &mut rng), &params)
                .unwrap();
        assert!(alpha.data().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn attend_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random(3, 2, &mut rng);
        let mut eye = Tensor::zeros(&[3, 3]);
        (0..3).for_each(|i| eye.row_mut(i)[i] = 1.0);
        assert_eq!(attend(&eye, &u).unwrap(), u);

        let uniform = Tensor::matrix(3, 3, vec![1.0 / 3.0; 9]).unwrap();
        let same = Tensor::from_rows(&[vec![0.3, -2.0], vec![0.3, -2.0], vec![0.3, -2.0]]).unwrap();
        let out = attend(&uniform, &same).unwrap();
        for t in 0..3 {
            assert!((out.at(t, 0) - 0.3).abs() < 1e-15 && (out.at(t, 1) + 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = CoAttentionParams::init(2, 2, 2, &mut rng);
        assert!(soft_alignment(&random(3, 2, &mut rng), &random(4, 2, &mut rng), &params).is_err());
        assert!(
            attention_distribution(&random(3, 1, &mut rng), &random(3, 2, &mut rng), &params)
                .is_err()
        );
        assert!(attend(&Tensor::zeros(&[2, 2]), &random(3, 2, &mut rng)).is_err());
        assert!(CoAttentionParams::new(
            Tensor::zeros(&[2, 2]),
            Tensor::zeros(&[3, 2]),
            Tensor::zeros(&[4])
        )
        .is_err());
    }

    #[test]
    fn tape_forward_matches_plain_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut store = ParamStore::new();
        let layer = CoAttentionLayer::new(&mut store, "att", 2, 3, 2, &mut rng).unwrap();
        let (u_p, u_q) = (random(4, 2, &mut rng), random(4, 3, &mut rng));
        let mut tape = Tape::new();
        let rows_p: Vec<Var> = (0..4)
            .map(|t| tape.constant_vec(u_p.row(t).to_vec()))
            .collect();
        let rows_q: Vec<Var> = (0..4)
            .map(|t| tape.constant_vec(u_q.row(t).to_vec()))
            .collect();
        let out = layer
            .forward(&mut tape, &store, &rows_p, &rows_q, &ColumnMean)
            .unwrap();
        let alpha = attention_distribution(&u_p, &u_q, &layer.params(&store)).unwrap();
        for (i, r) in out.alpha_rows.iter().enumerate() {
            for (a, b) in tape.data(*r).iter().zip(alpha.row(i)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let rel = relevance(&alpha);
        for (a, b) in tape.data(out.relevance).iter().zip(&rel) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
