//! Harness error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, McError>;

#[derive(Debug, Error)]
pub enum McError {
    /// Error bubbled up from the detector library.
    #[error(transparent)]
    Core(#[from] relay_sensing::Error),

    /// Detector/config combination outside the detector's validity regime,
    /// or malformed scenario fields.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// A requested operating point could not be calibrated.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// File I/O while writing results.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
