//! End-to-end emotion model: embeddings, component-wise LSTM encoding,
//! pairwise co-attention gating and an autoregressive decoder.

mod config;
pub mod loss;
mod model;
mod train;

pub use config::{PipelineConfig, VarMode, AUTO};
pub use loss::{build_emotion_loss, emotion_losses, EmotionLoss};
pub use model::{
    modality_pairs, Diagnostics, Feedback, LossVars, PipelineModel, Prediction, TapeForward,
    CHECKPOINT_FORMAT, HEAD_WIDTH,
};
pub use train::{evaluate_model, predict_all, train, write_history, EpochRecord, TrainOutcome};
