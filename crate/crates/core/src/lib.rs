//! Recovery of topic simplices from two-view document samples.

pub mod error;
pub mod eval;
pub mod generator;
pub mod geometry;
pub mod harness;
pub mod hull;
pub mod io;
pub mod linalg;
pub mod lower_bound;
pub mod noisefree;
pub mod noisy;
pub mod oracle;
pub mod selftest;
pub mod skew;
pub mod types;

pub use error::{GtmError, Result};
pub use geometry::PointCloud;
pub use types::{
    validate_model, Diagnostics, MixtureSpec, NoiseSpec, ProjectionEstimate, RecoveryResult, SampleSet,
    TopicModel, ViewSpec,
};
