//! Seedable weight initialisation.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::nn::Tensor;

/// Glorot/Xavier uniform: `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Tensor::matrix(rows, cols, data).expect("shape")
}

/// Matrix with orthonormal columns (or rows, when `rows < cols`), built by
/// modified Gram-Schmidt on a Gaussian draw.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let transpose = rows < cols;
    let (n, k) = if transpose {
        (cols, rows)
    } else {
        (rows, cols)
    };
    // k vectors of length n
    let mut vecs: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    for i in 0..k {
        for j in 0..i {
            let (head, tail) = vecs.split_at_mut(i);
            let proj: f64 = head[j].iter().zip(&tail[0]).map(|(a, b)| a * b).sum();
            for (v, q) in tail[0].iter_mut().zip(&head[j]) {
                *v -= proj * q;
            }
        }
        let norm = vecs[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        vecs[i].iter_mut().for_each(|v| *v /= norm);
    }
    let mut data = vec![0.0; rows * cols];
    for (c, v) in vecs.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            if transpose {
                data[c * cols + r] = *x;
            } else {
                data[r * cols + c] = *x;
            }
        }
    }
    Tensor::matrix(rows, cols, data).expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = orthogonal(8, 3, &mut rng);
        for a in 0..3 {
            for b in 0..3 {
                let d: f64 = (0..8).map(|r| m.at(r, a) * m.at(r, b)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn xavier_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = xavier_uniform(4, 2, &mut rng);
        let a = 1.0f64;
        assert!(m.data().iter().all(|v| v.abs() < a));
    }
}
