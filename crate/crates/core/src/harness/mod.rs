//! Datasets, synthetic data, cross-validation and model files.

pub mod dataset;
pub mod eval;
pub mod persist;
pub mod synth;

pub use dataset::{load_video, DatasetManifest, FrameFormat, ManifestConfig, ManifestEntry};
pub use eval::{cross_validate, cross_validate_manifest, prepare_video, prepare_videos, EvalReport};
pub use persist::{load_model, save_model};
pub use synth::{generate_synthetic, generate_videos, Motion, SyntheticSpec};
