//! Monte Carlo experiment driver for the relay spectrum-sensing detectors.
//!
//! Reproduces the standard studies on seeded synthetic channels:
//!
//! * [`roc::run_roc`] — detection vs false-alarm curves for six detector
//!   labels, analytic where closed forms exist and empirical elsewhere;
//! * [`pd_vs_l::run_pd_vs_frame_length`] — detection probability against the
//!   frame length at a fixed false-alarm rate;
//! * [`qq::run_qq_sweep`] — quantile-quantile normality diagnostics of the
//!   received components as the relay count grows.
//!
//! All randomness is counter-derived from `(seed, trial, symbol)`, so results
//! are identical whether trials run serially or in parallel, and repeated
//! runs are byte-identical. Channels follow unit-power fading priors: each
//! leg's estimate is drawn from the complementary prior `CN(0, 1-σ²)`, so a
//! zero error variance hands the detector the exact realization and a unit
//! error variance is blind sensing. The receive-SNR convention
//! `σ²_V + σ²_W/M = 10^(-SNR/10)` is calibrated for that unit channel power.

pub mod error;
pub mod output;
pub mod pd_vs_l;
pub mod qq;
pub mod roc;
pub mod scenario;
mod sim;

pub use error::{McError, Result};
pub use pd_vs_l::{run_pd_vs_frame_length, PdVsLResult, PdVsLRow};
pub use qq::{run_qq_sweep, QqReport, QqResult};
pub use roc::{run_roc, RocResult, RocRow};
pub use scenario::{Detector, Scenario, ThresholdSweep};
