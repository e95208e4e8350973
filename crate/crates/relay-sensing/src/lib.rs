//! Bayesian spectrum sensing for amplify-and-forward cognitive-radio relay
//! networks.
//!
//! A primary transmitter may be active or idle in each frame. When active, its
//! pilot signal reaches `M` single-antenna relays over fading channels; the
//! relays re-transmit (amplify-and-forward, no local decisions) to a fusion
//! receiver with `N` antennas. The receiver decides between the two hypotheses
//! with a Bayes-risk likelihood-ratio test, under four regimes of channel
//! knowledge:
//!
//! * [`perfect_csi`] — both channel legs known exactly: closed-form statistic,
//!   threshold, and detection/false-alarm probabilities.
//! * [`partial_csi`] — transmitter-to-relay channels known only through a noisy
//!   estimate: quadratic-form statistic whose law is a weighted sum of
//!   non-central chi-squares, evaluated by the [`laguerre`] series engine.
//! * [`gaussian_approx`] — both legs uncertain: Gaussian moment matching, with
//!   a Berry-Esseen bound quantifying the approximation error and product-normal
//!   distribution tools.
//! * [`laplace_bem`] — both legs uncertain: per-symbol marginal likelihood via
//!   Laplace approximation around the posterior mode of the latent relay
//!   vector, located by Bayesian expectation-maximization.
//!
//! [`signal_model`] defines the generative model and seeded frame sampling;
//! [`stats`] holds shared special functions and diagnostics.

pub mod error;
pub mod gaussian_approx;
pub mod laguerre;
pub mod laplace_bem;
pub mod partial_csi;
pub mod perfect_csi;
pub mod rng;
pub mod signal_model;
pub mod stats;

pub use error::{Error, Result};
pub use signal_model::{ChannelEstimates, CostMatrix, FrameObservation, Hypothesis, SystemConfig};
