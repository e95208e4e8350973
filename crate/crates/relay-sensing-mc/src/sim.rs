//! Per-trial simulation machinery shared by the studies.
//!
//! Each trial draws its channels from unit-power fading priors through
//! counter-derived streams, samples one frame under the assigned hypothesis,
//! and reduces the frame to a centered decision statistic `u` with the alarm
//! rule `u >= log γ`. Detectors that know a channel leg exactly are handed
//! the per-trial realization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use relay_sensing::partial_csi::{self, QuadraticFormSpec};
use relay_sensing::rng::{derive_seed, sample_cn_matrix, sample_cn_vector, substream};
use relay_sensing::signal_model::{sample_frame, ChannelEstimates, Hypothesis, SystemConfig};
use relay_sensing::{gaussian_approx, laplace_bem, perfect_csi};

use crate::error::Result;
use crate::scenario::Detector;

// Tag space for harness-level draws (disjoint from the frame sampler's).
const TAG_CHANNEL_G: u64 = 0xE1;
const TAG_CHANNEL_F: u64 = 0xE2;
const TAG_FRAME: u64 = 0xE3;

/// Hypothesis assignment: the first half of the trial budget is active.
pub fn trial_truth(trial: usize, trials: usize) -> Hypothesis {
    if trial < trials / 2 {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// Number of (active, idle) trials in a budget.
pub fn split_counts(trials: usize) -> (usize, usize) {
    (trials / 2, trials - trials / 2)
}

/// Per-symbol channel estimates of a trial.
pub struct TrialEstimates {
    pub g_bar: Vec<DMatrix<Complex64>>,
    pub f_bar: Vec<DVector<Complex64>>,
}

impl TrialEstimates {
    pub fn to_channel_estimates(&self) -> Result<ChannelEstimates> {
        ChannelEstimates::per_symbol(self.g_bar.clone(), self.f_bar.clone()).map_err(Into::into)
    }
}

/// Draws the per-symbol channel estimates of trial `t` from the complementary
/// unit-power prior: each leg's estimate has entry variance `1 - σ²` of that
/// leg, so the true channel `estimate + CN(0, σ²)` always has unit power.
/// Zero error variance hands the detector the exact realization; unit error
/// variance is blind sensing with a zero estimate.
pub fn draw_estimates(cfg: &SystemConfig, seed: u64, t: usize) -> TrialEstimates {
    let (n, m) = (cfg.n_antennas, cfg.n_relays);
    let zero_g = DMatrix::zeros(n, m);
    let zero_f = DVector::zeros(m);
    let var_g = (1.0 - cfg.sigma2_g).max(0.0);
    let var_f = (1.0 - cfg.sigma2_f).max(0.0);
    let mut g_bar = Vec::with_capacity(cfg.frame_len);
    let mut f_bar = Vec::with_capacity(cfg.frame_len);
    for l in 0..cfg.frame_len {
        let tags_g = [t as u64, l as u64, TAG_CHANNEL_G];
        let tags_f = [t as u64, l as u64, TAG_CHANNEL_F];
        g_bar.push(sample_cn_matrix(
            &mut substream(seed, &tags_g),
            &zero_g,
            var_g,
        ));
        f_bar.push(sample_cn_vector(
            &mut substream(seed, &tags_f),
            &zero_f,
            var_f,
        ));
    }
    TrialEstimates { g_bar, f_bar }
}

/// Frame seed of trial `t`.
pub fn frame_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, &[t as u64, TAG_FRAME])
}

/// Draws one frame for trial `t` using the estimates the regime dictates.
pub fn draw_frame(
    cfg: &SystemConfig,
    est: &ChannelEstimates,
    truth: Hypothesis,
    seed: u64,
    t: usize,
) -> Result<DMatrix<Complex64>> {
    Ok(sample_frame(cfg, est, truth, frame_seed(seed, t))?.y)
}

/// Centered statistic of one empirical-detector trial: alarm iff `u >= log γ`.
pub fn empirical_statistic(
    detector: Detector,
    cfg: &SystemConfig,
    seed: u64,
    t: usize,
    truth: Hypothesis,
) -> Result<f64> {
    let drawn = draw_estimates(cfg, seed, t);
    let est = drawn.to_channel_estimates()?;
    let y = draw_frame(cfg, &est, truth, seed, t)?;
    match detector {
        Detector::CsiEmpirical => {
            let model = perfect_csi::build_model(&drawn.g_bar, &drawn.f_bar, cfg)?;
            Ok(perfect_csi::test_statistic(&model, &y)? - perfect_csi::threshold(&model, 1.0)?)
        }
        Detector::PcsiEmpirical => {
            let model = partial_csi::build_dual_model(&drawn.g_bar, &drawn.f_bar, cfg)?;
            Ok(partial_csi::test_statistic(&model, &y)? - partial_csi::threshold(&model, 1.0)?)
        }
        Detector::PpcsiGaussian => {
            let model = gaussian_approx::build_ga_model(&est, cfg)?;
            let (_, statistic, _) = gaussian_approx::ga_decide(&model, &y, 1.0)?;
            Ok(statistic - partial_csi::threshold(model.dual(), 1.0)?)
        }
        Detector::PpcsiLaplace => {
            let d = laplace_bem::laplace_decide(&y, &est, cfg, 1.0)?;
            Ok(d.log_lrt)
        }
        Detector::CsiTheory | Detector::PcsiLaguerre => Err(crate::error::McError::Scenario(
            format!("{detector} is analytic; it has no per-trial statistic"),
        )),
    }
}

/// Fully blind sensing (both error variances exactly one) has identically
/// zero estimates, so the moment-matching model is trial independent.
pub fn is_fully_blind(cfg: &SystemConfig) -> bool {
    cfg.sigma2_g == 1.0 && cfg.sigma2_f == 1.0
}

/// Statistic of one blind moment-matching trial against the shared model.
pub fn blind_ga_statistic(
    cfg: &SystemConfig,
    dual: &partial_csi::DualGaussianModel,
    seed: u64,
    t: usize,
    truth: Hypothesis,
) -> Result<f64> {
    let est = ChannelEstimates::blind(cfg.n_antennas, cfg.n_relays);
    let y = draw_frame(cfg, &est, truth, seed, t)?;
    Ok(partial_csi::test_statistic(dual, &y)? - partial_csi::threshold(dual, 1.0)?)
}

/// Signal energy `s` of one perfect-knowledge trial (drives the closed-form
/// error probabilities).
pub fn theory_signal_energy(cfg: &SystemConfig, seed: u64, t: usize) -> Result<f64> {
    let drawn = draw_estimates(cfg, seed, t);
    let model = perfect_csi::build_model(&drawn.g_bar, &drawn.f_bar, cfg)?;
    Ok(model.s_total())
}

/// Whitened quadratic forms and unit-threshold offset of one series-detector
/// trial: the decision threshold at `γ` is `log γ + gamma1`.
pub struct SeriesTrial {
    pub spec_h0: QuadraticFormSpec,
    pub spec_h1: QuadraticFormSpec,
    pub gamma1: f64,
}

pub fn series_trial(cfg: &SystemConfig, seed: u64, t: usize) -> Result<SeriesTrial> {
    let drawn = draw_estimates(cfg, seed, t);
    let model = partial_csi::build_dual_model(&drawn.g_bar, &drawn.f_bar, cfg)?;
    Ok(SeriesTrial {
        spec_h0: partial_csi::whiten_to_quadratic_form(&model, Hypothesis::H0),
        spec_h1: partial_csi::whiten_to_quadratic_form(&model, Hypothesis::H1),
        gamma1: partial_csi::threshold(&model, 1.0)?,
    })
}

/// Closed-form perfect-knowledge error probabilities at `log γ` given the
/// signal energy.
pub fn theory_pd_pf(s: f64, log_gamma: f64) -> (f64, f64) {
    let pd = relay_sensing::stats::q_function(
        std::f64::consts::SQRT_2 * (log_gamma - s / 2.0) / s.sqrt(),
    );
    let pf = relay_sensing::stats::q_function(
        std::f64::consts::SQRT_2 * (log_gamma + s / 2.0) / s.sqrt(),
    );
    (pd, pf)
}

/// Sorted copy helper for quantile lookups.
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Empirical quantile (nearest-rank on a sorted slice).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let idx = ((p * n as f64).round() as usize).min(n - 1);
    sorted[idx]
}
