//! Multimodal time-series samples: CSV ingestion, alignment, splits and a
//! synthetic VAR generator with planted causal structure.

mod align;
pub mod dataset;
pub mod split;
mod stream;
pub mod synth;

pub use align::{align_streams, AlignPolicy};
pub use dataset::{load_dataset, save_dataset};
pub use split::{
    load_split_file, parse_split_file, split_samples, write_split_file, SplitName, Splits,
};
pub use stream::{
    load_label_csv, load_modality_csv, parse_label_csv, parse_modality_csv, write_label_csv,
    write_modality_csv, AlignedSample, FeatureStream, LabelKind, LabelTrack, NUM_CLASSES,
};
pub use synth::{generate_var, random_adjacency, SyntheticLabels, SyntheticSpec, VarProcess};
