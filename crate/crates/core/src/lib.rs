//! Multimodal time-series emotion prediction.
//!
//! The pipeline embeds each modality stream, encodes the stacked embeddings
//! with a component-wise LSTM whose input-weight column blocks expose a
//! Granger-causality graph, fuses pairwise co-attention relevance into a
//! gated context vector, and decodes per-timestep emotion labels with an
//! autoregressive LSTM.
//!
//! Module map:
//!
//! * [`data`]: CSV ingestion, alignment, splits and a VAR generator with a
//!   planted causal graph.
//! * [`nn`]: tensors, a reverse-mode tape, LSTM cells, optimizers,
//!   gradient checking and checkpoints.
//! * [`coattention`]: soft alignment, attention distribution, attended
//!   features and per-timestep relevance.
//! * [`gc`]: the component-wise LSTM encoder, group-lasso VAR training and
//!   GC matrix extraction.
//! * [`pipeline`]: the end-to-end model with training and inference.
//! * [`metrics`]: CCC, MSE, Pearson, top-1 accuracy and the emotion taxonomy.

pub mod coattention;
pub mod data;
pub mod error;
pub mod gc;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod registry;

pub use error::{Error, IngestKind, Result};
