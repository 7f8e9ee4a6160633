//! Granger-causality discovery with a component-wise LSTM.

pub mod encoder;
pub mod fit;
mod matrix;
pub mod prox;
pub mod var;

pub use encoder::{encode, pi_transform, stack_rows, unstack_rows, ClstmEncoder};
pub use fit::{extract_gc, fit_path, fit_var, standardize, PathPoint, VarFit, VarTrainConfig};
pub use matrix::{auroc, edge_metrics, parse_gc_report, write_gc_report, EdgeMetrics, GCMatrix};
pub use prox::prox_group_lasso;
pub use var::var_loss;
