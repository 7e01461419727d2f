//! Echoic-location-feature SLAM at desk scale.
//!
//! The pipeline, end to end:
//!
//! 1. [`dsp`] synthesizes the near-inaudible excitation chirp and turns raw
//!    recordings into fixed-length echo traces and 12x48 spectrograms.
//! 2. [`room`] renders location- and orientation-dependent echoes in 2D
//!    polygonal rooms via the image-source method.
//! 3. [`motion`] simulates footstep trajectories with drifting odometry.
//! 4. [`model`] trains a small convolutional encoder with a normalized-
//!    temperature contrastive loss to map spectrograms to unit-norm
//!    location embeddings (ELFs).
//! 5. [`loop_closure`] scores echo-sequence similarity between footsteps,
//!    binarizes the similarity matrix, and curates loop-closure candidates
//!    with density clustering, robust line fitting, and a symmetry filter.
//! 6. [`pose_graph`] optimizes the trajectory against odometry and the
//!    curated closures with Levenberg-Marquardt.
//! 7. [`mapping`] packages trajectory maps, aligns them into a common
//!    frame, and superimposes them into an orientation-reconciled floor map.
//! 8. [`localize`] answers one-shot and short-trajectory location queries
//!    against a map.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! `f64` is used by the command-line pipeline and `f32` by the wire formats.

pub mod config;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod geom;
pub mod linalg;
pub mod localize;
pub mod loop_closure;
pub mod mapping;
pub mod model;
pub mod motion;
pub mod pose_graph;
pub mod room;
pub mod scalar;
pub mod seeding;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the command-line pipeline.
pub type Real = f64;

/// Echo trace at pipeline precision.
pub type EchoTrace64 = dsp::EchoTrace<f64>;
/// Spectrogram at pipeline precision.
pub type Spectrogram64 = dsp::Spectrogram<f64>;
/// Location embedding at pipeline precision.
pub type Elf64 = model::Elf<f64>;
/// SE(2) pose at pipeline precision.
pub type Pose64 = motion::Pose2<f64>;
/// Footstep similarity matrix at pipeline precision.
pub type EssMatrix64 = loop_closure::EssMatrix<f64>;
