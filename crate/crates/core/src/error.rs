use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("point has non-finite coordinate ({0}, {1}, {2})")]
    NonFinitePoint(f64, f64, f64),

    #[error("target voxel ({0}, {1}, {2}) is outside the grid")]
    TargetOutOfBounds(i32, i32, i32),

    #[error("negative noise sigma {0}")]
    NegativeSigma(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid specs differ between operands")]
    SpecMismatch,

    #[error("target class {class} outside the {channels} probability channels")]
    ClassOutOfRange { class: u16, channels: usize },

    #[error("non-finite gradient; update aborted")]
    NonFiniteGradient,

    #[error("empty training dataset")]
    EmptyDataset,

    #[error("step {got} arrived after step {last}; steps must be strictly increasing")]
    OutOfOrderStep { last: u64, got: u64 },

    #[error("buffer has no record for step {0}")]
    BufferMiss(u64),

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("snapshot does not match the model it is restored into: {0}")]
    SnapshotMismatch(String),

    #[error("contradictory configuration: {0}")]
    ContradictoryConfig(String),

    #[error("degenerate synthetic world: {0}")]
    DegenerateWorld(String),

    #[error("{path}: file size {got} is not a whole number of 16-byte points")]
    BadScanFile { path: PathBuf, got: u64 },

    #[error("{path}:{line}: {msg}")]
    BadPoseFile {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: expected {expected} bytes, got {got}")]
    BadVoxelFile {
        path: PathBuf,
        expected: u64,
        got: u64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
