//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments, malformed configuration, or violated preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file on disk does not match the expected format.
    #[error("format error in {path}: {detail}")]
    Format { path: String, detail: String },

    /// A persisted file declares a version this build does not read.
    #[error("unsupported format version {found} (expected {expected}) in {path}")]
    UnsupportedVersion {
        path: String,
        found: u32,
        expected: u32,
    },

    /// A metric has no defined value on this input (e.g. zero scatter).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Numeric failure: non-finite values, shape mismatch, failed generation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Calibration could not reach the requested target.
    #[error("calibration failed: target {target} unreachable, closest achieved {achieved}")]
    Calibration { target: f64, achieved: f64 },

    /// A transfer protocol precondition does not hold.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Run directories cannot be aggregated (e.g. mismatched epoch grids).
    #[error("aggregation error: {0}")]
    Aggregation(String),

    /// Significance test received degenerate input (zero variance, too few samples).
    #[error("degenerate significance-test input: {0}")]
    DegenerateTest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 input/config, 2 numeric, 3 degenerate test.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Format { .. }
            | Error::UnsupportedVersion { .. }
            | Error::Protocol(_)
            | Error::Aggregation(_)
            | Error::Io(_)
            | Error::Serde(_) => 1,
            Error::UndefinedMetric(_) | Error::Numeric(_) | Error::Calibration { .. } => 2,
            Error::DegenerateTest(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
