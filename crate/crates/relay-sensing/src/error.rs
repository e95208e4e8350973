//! Error type shared by all detector modules.

use thiserror::Error;

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by model construction, detectors, and the series engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (non-positive variance, bad prior, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Inconsistent matrix/vector dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The two hypotheses are statistically indistinguishable under the
    /// requested model (zero statistic spread or zero covariance difference).
    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    /// Laguerre coefficient recurrence left the representable range.
    #[error("series instability at coefficient k={k}: {reason}")]
    SeriesInstability { k: usize, reason: String },

    /// An iterate of the expectation-maximization solver became non-finite.
    #[error("solver diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    /// The Hessian at the reported mode is not negative definite, so the
    /// Gaussian volume term of the Laplace estimate is undefined.
    #[error("saddle or ridge at the mode: {0}")]
    SaddlePoint(String),

    /// A diagnostic was asked for with too little data.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}
