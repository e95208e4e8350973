//! Receiver-operating-characteristic study.

use rayon::prelude::*;
use relay_sensing::laguerre::{build_series, SeriesTarget};
use relay_sensing::signal_model::bayes_gamma;

use crate::error::Result;
use crate::scenario::{Detector, Scenario, ThresholdSweep};
use crate::sim;

/// One sweep point of a detection/false-alarm curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RocRow {
    pub p_f: f64,
    pub p_d: f64,
    /// Threshold γ realizing the operating point (alarm iff `u >= log γ`).
    pub gamma: f64,
    /// Binomial standard errors; zero for closed-form rows.
    pub se_pf: f64,
    pub se_pd: f64,
}

/// Detection/false-alarm curve with its provenance.
#[derive(Debug, Clone)]
pub struct RocResult {
    pub detector: Detector,
    pub n_antennas: usize,
    pub n_relays: usize,
    pub frame_len: usize,
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    /// Rows ordered by ascending false-alarm rate (descending γ).
    pub rows: Vec<RocRow>,
}

/// Trials used to calibrate sweeps and target rates for the series detector,
/// whose full-budget closed forms are too expensive to rebuild per probe.
const SERIES_CALIBRATION_TRIALS: usize = 4096;

/// Runs the configured study: decision counting for the empirical detectors,
/// channel-averaged closed forms for the analytic ones. Deterministic in
/// `scenario.seed`, serially or in parallel.
pub fn run_roc(scenario: &Scenario) -> Result<RocResult> {
    scenario.validate()?;
    let meta = |rows: Vec<RocRow>| RocResult {
        detector: scenario.detector,
        n_antennas: scenario.cfg.n_antennas,
        n_relays: scenario.cfg.n_relays,
        frame_len: scenario.cfg.frame_len,
        snr_db: relay_sensing::signal_model::receive_snr_db(&scenario.cfg).unwrap_or(f64::NAN),
        trials: scenario.trials,
        seed: scenario.seed,
        rows,
    };
    match scenario.detector {
        Detector::CsiTheory => Ok(meta(run_theory(scenario)?)),
        Detector::PcsiLaguerre => Ok(meta(run_series(scenario)?)),
        _ => Ok(meta(run_empirical(scenario)?)),
    }
}

/// log γ grid (descending) shared by the sweep variants, from a false-alarm
/// function or sample as appropriate.
fn auto_grid(points: usize, log_gamma_bayes: f64, q_low: f64, q_high: f64) -> Vec<f64> {
    let half = (q_low - log_gamma_bayes)
        .abs()
        .max((q_high - log_gamma_bayes).abs())
        .max(1e-3);
    (0..points)
        .map(|i| {
            let frac = i as f64 / (points - 1) as f64;
            log_gamma_bayes + half - 2.0 * half * frac
        })
        .collect()
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn run_empirical(scenario: &Scenario) -> Result<Vec<RocRow>> {
    let cfg = &scenario.cfg;
    let (n1, n0) = sim::split_counts(scenario.trials);
    if n1 == 0 || n0 == 0 {
        return Err(crate::error::McError::Scenario(
            "empirical detectors need at least 2 trials to cover both hypotheses".into(),
        ));
    }
    // Fully blind moment matching is channel independent: hoist it off the
    // trials.
    let shared_dual = if scenario.detector == Detector::PpcsiGaussian && sim::is_fully_blind(cfg) {
        let est = relay_sensing::ChannelEstimates::blind(cfg.n_antennas, cfg.n_relays);
        Some(relay_sensing::gaussian_approx::build_ga_model(&est, cfg)?)
    } else {
        None
    };
    let statistics: Vec<f64> = (0..scenario.trials)
        .into_par_iter()
        .map(|t| {
            let truth = sim::trial_truth(t, scenario.trials);
            match &shared_dual {
                Some(model) => sim::blind_ga_statistic(cfg, model.dual(), scenario.seed, t, truth),
                None => sim::empirical_statistic(scenario.detector, cfg, scenario.seed, t, truth),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let sorted_h1 = sim::sorted(&statistics[..n1]);
    let sorted_h0 = sim::sorted(&statistics[n1..]);

    // Descending log γ so rows come out with ascending false-alarm rate.
    let log_gammas: Vec<f64> = match &scenario.threshold_sweep {
        ThresholdSweep::Auto { points } => auto_grid(
            *points,
            bayes_gamma(cfg)?.ln(),
            sim::quantile_sorted(&sorted_h0, 0.001),
            sim::quantile_sorted(&sorted_h0, 0.999),
        ),
        ThresholdSweep::Gammas(gammas) => gammas.iter().rev().map(|g| g.ln()).collect(),
        ThresholdSweep::TargetPf(targets) => targets
            .iter()
            .map(|&pf| sim::quantile_sorted(&sorted_h0, 1.0 - pf))
            .collect(),
    };

    let exceed_rate = |sorted: &[f64], x: f64| {
        let below = sorted.partition_point(|&v| v < x);
        (sorted.len() - below) as f64 / sorted.len() as f64
    };
    let rows = log_gammas
        .iter()
        .map(|&lg| {
            let p_f = exceed_rate(&sorted_h0, lg);
            let p_d = exceed_rate(&sorted_h1, lg);
            RocRow {
                p_f,
                p_d,
                gamma: lg.exp(),
                se_pf: binomial_se(p_f, n0),
                se_pd: binomial_se(p_d, n1),
            }
        })
        .collect();
    Ok(rows)
}

/// Monotone-decreasing root find of `f(x) = target` on log γ.
fn bisect_decreasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn run_theory(scenario: &Scenario) -> Result<Vec<RocRow>> {
    let energies: Vec<f64> = (0..scenario.trials)
        .into_par_iter()
        .map(|t| sim::theory_signal_energy(&scenario.cfg, scenario.seed, t))
        .collect::<Result<Vec<_>>>()?;
    let avg = |lg: f64| {
        let (mut pd, mut pf) = (0.0, 0.0);
        for &s in &energies {
            let (d, f) = sim::theory_pd_pf(s, lg);
            pd += d;
            pf += f;
        }
        (pd / energies.len() as f64, pf / energies.len() as f64)
    };

    let log_gammas: Vec<f64> = match &scenario.threshold_sweep {
        ThresholdSweep::Auto { points } => auto_grid(
            *points,
            bayes_gamma(&scenario.cfg)?.ln(),
            bisect_decreasing(|lg| avg(lg).1, 0.999),
            bisect_decreasing(|lg| avg(lg).1, 0.001),
        ),
        ThresholdSweep::Gammas(gammas) => gammas.iter().rev().map(|g| g.ln()).collect(),
        ThresholdSweep::TargetPf(targets) => targets
            .iter()
            .map(|&pf| bisect_decreasing(|lg| avg(lg).1, pf))
            .collect(),
    };

    Ok(log_gammas
        .iter()
        .map(|&lg| {
            let (p_d, p_f) = avg(lg);
            RocRow {
                p_f,
                p_d,
                gamma: lg.exp(),
                se_pf: 0.0,
                se_pd: 0.0,
            }
        })
        .collect())
}

fn run_series(scenario: &Scenario) -> Result<Vec<RocRow>> {
    let order = scenario.laguerre_order;
    let trials: Vec<sim::SeriesTrial> = (0..scenario.trials)
        .into_par_iter()
        .map(|t| sim::series_trial(&scenario.cfg, scenario.seed, t))
        .collect::<Result<Vec<_>>>()?;

    // Calibration probes rebuild series per evaluation; bound that work by
    // calibrating on a leading subsample.
    let calib = &trials[..trials.len().min(SERIES_CALIBRATION_TRIALS)];
    let calib_pf = |lg: f64| -> Result<f64> {
        let mut pf = 0.0;
        for trial in calib {
            let s0 = build_series(&trial.spec_h0, order, None, None, SeriesTarget::Cdf)?;
            pf += 1.0 - s0.eval_cdf(lg + trial.gamma1);
        }
        Ok(pf / calib.len() as f64)
    };

    let log_gammas: Vec<f64> = match &scenario.threshold_sweep {
        ThresholdSweep::Auto { points } => {
            let lo = bisect_decreasing(|lg| calib_pf(lg).unwrap_or(f64::NAN), 0.999);
            let hi = bisect_decreasing(|lg| calib_pf(lg).unwrap_or(f64::NAN), 0.001);
            auto_grid(*points, bayes_gamma(&scenario.cfg)?.ln(), lo, hi)
        }
        ThresholdSweep::Gammas(gammas) => gammas.iter().rev().map(|g| g.ln()).collect(),
        ThresholdSweep::TargetPf(targets) => targets
            .iter()
            .map(|&pf| bisect_decreasing(|lg| calib_pf(lg).unwrap_or(f64::NAN), pf))
            .collect(),
    };

    // Per-trial curves, averaged in trial order for determinism.
    let per_trial: Vec<Vec<(f64, f64)>> = trials
        .par_iter()
        .map(|trial| -> Result<Vec<(f64, f64)>> {
            let s0 = build_series(&trial.spec_h0, order, None, None, SeriesTarget::Cdf)?;
            let s1 = build_series(&trial.spec_h1, order, None, None, SeriesTarget::Cdf)?;
            Ok(log_gammas
                .iter()
                .map(|&lg| {
                    let crit = lg + trial.gamma1;
                    (1.0 - s1.eval_cdf(crit), 1.0 - s0.eval_cdf(crit))
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_trial.len() as f64;
    Ok(log_gammas
        .iter()
        .enumerate()
        .map(|(j, &lg)| {
            let (mut pd, mut pf) = (0.0, 0.0);
            for curve in &per_trial {
                pd += curve[j].0;
                pf += curve[j].1;
            }
            RocRow {
                p_f: pf / n,
                p_d: pd / n,
                gamma: lg.exp(),
                se_pf: 0.0,
                se_pd: 0.0,
            }
        })
        .collect())
}

/// Linear interpolation of `p_d` at a target `p_f` on a curve with ascending
/// false-alarm rates; clamps outside the covered range.
pub fn interpolate_pd(result: &RocResult, p_f: f64) -> f64 {
    let rows = &result.rows;
    if rows.is_empty() {
        return f64::NAN;
    }
    if p_f <= rows[0].p_f {
        return rows[0].p_d;
    }
    if p_f >= rows[rows.len() - 1].p_f {
        return rows[rows.len() - 1].p_d;
    }
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if p_f >= a.p_f && p_f <= b.p_f {
            if b.p_f == a.p_f {
                return 0.5 * (a.p_d + b.p_d);
            }
            let frac = (p_f - a.p_f) / (b.p_f - a.p_f);
            return a.p_d + frac * (b.p_d - a.p_d);
        }
    }
    rows[rows.len() - 1].p_d
}
