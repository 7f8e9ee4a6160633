//! Minimal differentiable numerical core.
//!
//! Everything is `f64` and batch size 1.

pub mod checkpoint;
mod dense;
pub mod gradcheck;
pub mod init;
pub mod lstm;
pub mod optim;
mod params;
pub mod tape;
pub mod tensor;

pub use checkpoint::Checkpoint;
pub use dense::{Dense, DenseVars};
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{lstm_sequence, lstm_step, LstmCellParams, LstmWeights};
pub use optim::{build_optimizer, Optimizer, OptimizerConfig};
pub use params::{ParamId, ParamStore, Parameter};
pub use tape::{Activation, Tape, Var};
pub use tensor::Tensor;
