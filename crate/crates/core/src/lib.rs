//! Online test-time adaptation for LiDAR semantic scene completion.
//!
//! An observation made at one moment constrains the scene at another: a
//! LiDAR return confirms occupancy at the hit point and emptiness along the
//! line of sight to it. This crate turns those constraints, together with
//! confidence-filtered semantic pseudo-labels, into supervision that adapts
//! a scene completion model online as a drive unfolds, using a dual scheme
//! of a per-step "moment" model and a persistent, delayed-update "gradual"
//! model.

pub mod bev;
pub mod comp_map;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod kitti;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod presets;
pub mod pseudo_gt;
pub mod runner;
pub mod scheduler;
pub mod sequence;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{GridSpec, LabelGrid, ProbGrid, VoxelIndex, IGNORE_LABEL};
