//! Streaming interface over LiDAR sequences.

use crate::error::Result;
use crate::geometry::{PointCloud, Pose};
use crate::grid::LabelGrid;

/// One element of a sequence: a scan in the sensor frame, the sensor's world
/// pose, and ground truth when available for this step.
#[derive(Debug, Clone)]
pub struct SequenceStep {
    pub index: u64,
    pub cloud: PointCloud,
    pub pose: Pose,
    pub gt: Option<LabelGrid>,
}

/// A single-consumer stream of scans with monotonically increasing indices.
pub trait SequenceSource {
    fn next_step(&mut self) -> Result<Option<SequenceStep>>;
}
