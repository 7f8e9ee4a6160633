use rand::Rng;

use crate::error::Result;
use crate::nn::init::xavier_uniform;
use crate::nn::tensor::matvec;
use crate::nn::{ParamId, ParamStore, Tape, Tensor, Var};

/// Affine map `out = W x + b` with parameters in a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

/// Tape leaves for a [`Dense`] layer.
#[derive(Clone, Copy, Debug)]
pub struct DenseVars {
    pub weight: Var,
    pub bias: Var,
}

impl Dense {
    /// Xavier-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.add(
            format!("{name}.weight"),
            xavier_uniform(out_dim, in_dim, rng),
        )?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[out_dim]))?;
        Ok(Self {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    /// All-zero weights and bias.
    pub fn zeros(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        let weight = store.add(format!("{name}.weight"), Tensor::zeros(&[out_dim, in_dim]))?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[out_dim]))?;
        Ok(Self {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }

    pub fn apply(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        matvec(
            store.value(self.weight).data(),
            self.out_dim,
            self.in_dim,
            x,
            Some(store.value(self.bias).data()),
            &mut out,
        );
        out
    }

    pub fn on_tape(&self, tape: &mut Tape, store: &ParamStore) -> DenseVars {
        DenseVars {
            weight: tape.param(store, self.weight),
            bias: tape.param(store, self.bias),
        }
    }
}

impl DenseVars {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        tape.linear(self.weight, x, Some(self.bias))
    }
}
