//! Detection probability against frame length at a fixed false-alarm rate.
//!
//! Compares the exact-knowledge detector with the estimated-transmitter-leg
//! detector over a grid of antenna counts and frame lengths, with the
//! transmitter estimate blind (zero mean). Thresholds are calibrated per
//! point: order statistics of the idle-hypothesis statistic sample for the
//! counting detectors, root finding on the channel-averaged closed form for
//! the analytic rows. Channel draws are shared across detectors at the same
//! grid point, so the curves are directly comparable.

use rayon::prelude::*;
use relay_sensing::rng::derive_seed;
use relay_sensing::SystemConfig;

use crate::error::{McError, Result};
use crate::scenario::Detector;
use crate::sim;

/// One calibrated operating point.
#[derive(Debug, Clone)]
pub struct PdVsLRow {
    pub detector: Detector,
    pub n_antennas: usize,
    pub frame_len: usize,
    pub target_pf: f64,
    /// False-alarm rate actually realized by the calibrated threshold.
    pub achieved_pf: f64,
    pub p_d: f64,
    /// Binomial standard error; zero for closed-form rows.
    pub se_pd: f64,
    /// False when the target rate was out of reach for the sample size.
    pub calibrated: bool,
}

#[derive(Debug, Clone)]
pub struct PdVsLResult {
    pub rows: Vec<PdVsLRow>,
    pub n_relays: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Detectors reported by the study, in row order.
const STUDY_DETECTORS: [Detector; 3] = [
    Detector::CsiTheory,
    Detector::CsiEmpirical,
    Detector::PcsiEmpirical,
];

/// Runs the study on every `(n_antennas, frame_len)` pair.
///
/// `cfg_base` fixes the relay count and noise variances; it must have an
/// exact relay-to-receiver leg and a strictly uncertain transmitter leg
/// (`sigma2_g = 0`, `sigma2_f > 0`). The exact-knowledge rows internally
/// drop the transmitter uncertainty.
pub fn run_pd_vs_frame_length(
    cfg_base: &SystemConfig,
    n_list: &[usize],
    l_list: &[usize],
    target_pf: f64,
    trials: usize,
    seed: u64,
) -> Result<PdVsLResult> {
    cfg_base.validate().map_err(McError::Core)?;
    if target_pf.is_nan() || target_pf <= 0.0 || target_pf >= 1.0 {
        return Err(McError::Scenario(
            "target false-alarm rate must lie in (0,1)".into(),
        ));
    }
    if n_list.is_empty() || l_list.is_empty() {
        return Err(McError::Scenario(
            "antenna and frame-length grids must be nonempty".into(),
        ));
    }
    if trials < 10 {
        return Err(McError::Scenario("need at least 10 trials".into()));
    }
    if cfg_base.sigma2_g != 0.0 {
        return Err(McError::Scenario(
            "the study compares exact and estimated transmitter legs: set sigma2_g = 0".into(),
        ));
    }
    if cfg_base.sigma2_f <= 0.0 {
        return Err(McError::Scenario(
            "the estimated-channel rows need sigma2_f > 0 (blind sensing uses 1)".into(),
        ));
    }

    let mut rows = Vec::new();
    for &detector in &STUDY_DETECTORS {
        for &n in n_list {
            for &l in l_list {
                if n == 0 || l == 0 {
                    return Err(McError::Scenario("grid entries must be positive".into()));
                }
                let mut cfg = cfg_base.clone();
                cfg.n_antennas = n;
                cfg.frame_len = l;
                cfg.pilot = vec![num_complex::Complex64::new(1.0, 0.0); l];
                if matches!(detector, Detector::CsiTheory | Detector::CsiEmpirical) {
                    cfg.sigma2_f = 0.0;
                }
                cfg.validate().map_err(McError::Core)?;
                // Shared sub-seed per grid point: detectors see the same
                // channel realizations.
                let point_seed = derive_seed(seed, &[n as u64, l as u64]);
                rows.push(grid_point(detector, &cfg, target_pf, trials, point_seed)?);
            }
        }
    }
    Ok(PdVsLResult {
        rows,
        n_relays: cfg_base.n_relays,
        trials,
        seed,
    })
}

fn grid_point(
    detector: Detector,
    cfg: &SystemConfig,
    target_pf: f64,
    trials: usize,
    seed: u64,
) -> Result<PdVsLRow> {
    let (n1, n0) = sim::split_counts(trials);
    let row = |achieved_pf: f64, p_d: f64, se_pd: f64, calibrated: bool| PdVsLRow {
        detector,
        n_antennas: cfg.n_antennas,
        frame_len: cfg.frame_len,
        target_pf,
        achieved_pf,
        p_d,
        se_pd,
        calibrated,
    };

    if detector == Detector::CsiTheory {
        let energies: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| sim::theory_signal_energy(cfg, seed, t))
            .collect::<Result<Vec<_>>>()?;
        let avg_pf = |lg: f64| {
            energies
                .iter()
                .map(|&s| sim::theory_pd_pf(s, lg).1)
                .sum::<f64>()
                / energies.len() as f64
        };
        let mut lo = -60.0f64;
        let mut hi = 60.0f64;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if avg_pf(mid) > target_pf {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lg = 0.5 * (lo + hi);
        let achieved = avg_pf(lg);
        let p_d = energies
            .iter()
            .map(|&s| sim::theory_pd_pf(s, lg).0)
            .sum::<f64>()
            / energies.len() as f64;
        let calibrated = (achieved - target_pf).abs() <= 0.1 * target_pf + 1e-6;
        return Ok(row(achieved, p_d, 0.0, calibrated));
    }

    let statistics: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| sim::empirical_statistic(detector, cfg, seed, t, sim::trial_truth(t, trials)))
        .collect::<Result<Vec<_>>>()?;
    let sorted_h1 = sim::sorted(&statistics[..n1]);
    let sorted_h0 = sim::sorted(&statistics[n1..]);
    // Order-statistic calibration on the idle sample.
    let threshold = sim::quantile_sorted(&sorted_h0, 1.0 - target_pf);
    let exceed = |sorted: &[f64], x: f64| {
        (sorted.len() - sorted.partition_point(|&v| v < x)) as f64 / sorted.len() as f64
    };
    let achieved = exceed(&sorted_h0, threshold);
    let p_d = exceed(&sorted_h1, threshold);
    // The quantile resolves the target only when the idle sample is big
    // enough to place ~5 exceedances beyond it.
    let calibrated = n0 as f64 * target_pf.min(1.0 - target_pf) >= 5.0
        && (achieved - target_pf).abs() <= 0.25 * target_pf + 2.0 / n0 as f64;
    Ok(row(
        achieved,
        p_d,
        (p_d * (1.0 - p_d) / n1 as f64).sqrt(),
        calibrated,
    ))
}
