//! Spatio-temporal covariance (Cov3D) descriptors for video classification.
//!
//! A video is mapped to a 15-channel feature video ([`features`]), whose
//! integral tensors give the covariance of any spatio-temporal window in
//! `O(d^2)` ([`integral`]). Descriptors live on the SPD manifold ([`spd`])
//! and are embedded in Euclidean space by a weighted Riemannian locality
//! preserving projection ([`wrlpp`]) inside one-vs-one LogitBoost
//! ([`boost`]), which searches the window grid of [`windows`]. The
//! [`harness`] module covers datasets, cross-validation and persistence.

pub mod boost;
pub mod error;
pub mod features;
pub mod harness;
pub mod integral;
pub mod spd;
pub mod windows;
pub mod wrlpp;

pub use error::{Error, Result};
pub use features::{build_feature_video, FeatureVideo, FlowField, Video};
pub use integral::{DescriptorExtractor, IntegralTensors, Window};
pub use spd::{SpdMatrix, TangentVector};
