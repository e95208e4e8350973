//! Scenario description: detector label, configuration, trial budget,
//! threshold sweep, and seed.

use relay_sensing::SystemConfig;

use crate::error::{McError, Result};

/// Detector labels matching the comparison studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    /// Closed-form error probabilities under perfect channel knowledge,
    /// averaged over channel draws.
    CsiTheory,
    /// Monte Carlo decision rule under perfect channel knowledge.
    CsiEmpirical,
    /// Laguerre-series error probabilities with an exact relay-to-receiver
    /// leg and an estimated transmitter leg.
    PcsiLaguerre,
    /// Monte Carlo quadratic-form decision rule for the same regime.
    PcsiEmpirical,
    /// Moment-matching Gaussian detector with both legs uncertain.
    PpcsiGaussian,
    /// Laplace marginal-likelihood detector with both legs uncertain.
    PpcsiLaplace,
}

impl Detector {
    pub const ALL: [Detector; 6] = [
        Detector::CsiTheory,
        Detector::CsiEmpirical,
        Detector::PcsiLaguerre,
        Detector::PcsiEmpirical,
        Detector::PpcsiGaussian,
        Detector::PpcsiLaplace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Detector::CsiTheory => "csi_theory",
            Detector::CsiEmpirical => "csi_empirical",
            Detector::PcsiLaguerre => "pcsi_laguerre",
            Detector::PcsiEmpirical => "pcsi_empirical",
            Detector::PpcsiGaussian => "ppcsi_gaussian",
            Detector::PpcsiLaplace => "ppcsi_laplace",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Detector::ALL
            .iter()
            .copied()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                McError::Scenario(format!(
                    "unknown detector '{s}'; expected one of {}",
                    Detector::ALL.map(|d| d.name()).join(", ")
                ))
            })
    }

    /// Whether the detector evaluates closed forms rather than counting
    /// decisions.
    pub fn is_analytic(&self) -> bool {
        matches!(self, Detector::CsiTheory | Detector::PcsiLaguerre)
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How decision thresholds are swept to trace a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSweep {
    /// Log-spaced thresholds centered on the Bayes threshold, wide enough to
    /// cover false-alarm rates from 1e-3 to 1-1e-3; the given number of
    /// points (at least 2).
    Auto { points: usize },
    /// Explicit threshold values, strictly positive and sorted ascending.
    Gammas(Vec<f64>),
    /// Target false-alarm rates in (0,1), sorted ascending; thresholds are
    /// calibrated per rate (order statistics of the idle-hypothesis sample
    /// for empirical detectors, root finding on the closed form otherwise).
    TargetPf(Vec<f64>),
}

impl Default for ThresholdSweep {
    fn default() -> Self {
        ThresholdSweep::Auto { points: 41 }
    }
}

impl ThresholdSweep {
    fn validate(&self) -> Result<()> {
        match self {
            ThresholdSweep::Auto { points } => {
                if *points < 2 {
                    return Err(McError::Scenario(
                        "auto sweep needs at least 2 points".into(),
                    ));
                }
            }
            ThresholdSweep::Gammas(g) => {
                if g.is_empty() {
                    return Err(McError::Scenario("threshold sweep must be nonempty".into()));
                }
                if !g.iter().all(|&x| x > 0.0 && x.is_finite()) {
                    return Err(McError::Scenario(
                        "thresholds must be positive and finite".into(),
                    ));
                }
                if g.windows(2).any(|w| w[0] > w[1]) {
                    return Err(McError::Scenario(
                        "thresholds must be sorted ascending".into(),
                    ));
                }
            }
            ThresholdSweep::TargetPf(p) => {
                if p.is_empty() {
                    return Err(McError::Scenario(
                        "target false-alarm grid must be nonempty".into(),
                    ));
                }
                if !p.iter().all(|&x| x > 0.0 && x < 1.0) {
                    return Err(McError::Scenario(
                        "target false-alarm rates must lie in (0,1)".into(),
                    ));
                }
                if p.windows(2).any(|w| w[0] > w[1]) {
                    return Err(McError::Scenario(
                        "target rates must be sorted ascending".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One experiment: a detector on a configuration with a trial budget, a
/// threshold sweep, and a master seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub detector: Detector,
    pub cfg: SystemConfig,
    pub trials: usize,
    pub threshold_sweep: ThresholdSweep,
    pub seed: u64,
    /// Expansion order of the series detector.
    pub laguerre_order: usize,
}

/// Default trial budget of the comparison studies.
pub const DEFAULT_TRIALS: usize = 100_000;
/// Default series expansion order.
pub const DEFAULT_LAGUERRE_ORDER: usize = 100;

impl Scenario {
    pub fn new(detector: Detector, cfg: SystemConfig, trials: usize, seed: u64) -> Self {
        Scenario {
            detector,
            cfg,
            trials,
            threshold_sweep: ThresholdSweep::default(),
            seed,
            laguerre_order: DEFAULT_LAGUERRE_ORDER,
        }
    }

    /// Checks budget, sweep, and detector/config compatibility.
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate().map_err(McError::Core)?;
        if self.trials < 1 {
            return Err(McError::Scenario("need at least one trial".into()));
        }
        if self.laguerre_order < 1 {
            return Err(McError::Scenario("series order must be at least 1".into()));
        }
        self.threshold_sweep.validate()?;
        if self.cfg.sigma2_g > 1.0 || self.cfg.sigma2_f > 1.0 {
            return Err(McError::Scenario(
                "the harness draws channel estimates from the complementary unit-power \
                 prior CN(0, 1-sigma2); error variances above one are unsupported"
                    .into(),
            ));
        }
        let (g_err, f_err) = (self.cfg.sigma2_g, self.cfg.sigma2_f);
        match self.detector {
            Detector::CsiTheory | Detector::CsiEmpirical => {
                if g_err != 0.0 || f_err != 0.0 {
                    return Err(McError::Scenario(format!(
                        "{} assumes exact channels: set sigma2_g = sigma2_f = 0",
                        self.detector
                    )));
                }
            }
            Detector::PcsiLaguerre | Detector::PcsiEmpirical => {
                if g_err != 0.0 {
                    return Err(McError::Scenario(format!(
                        "{} assumes an exact relay-to-receiver leg: set sigma2_g = 0",
                        self.detector
                    )));
                }
                if f_err <= 0.0 {
                    return Err(McError::Scenario(format!(
                        "{} needs transmitter-leg uncertainty: set sigma2_f > 0",
                        self.detector
                    )));
                }
            }
            Detector::PpcsiGaussian | Detector::PpcsiLaplace => {
                if g_err <= 0.0 {
                    return Err(McError::Scenario(format!(
                        "{} models relay-to-receiver uncertainty: set sigma2_g > 0",
                        self.detector
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(g: f64, f: f64) -> SystemConfig {
        SystemConfig::new(2, 2, 1, 0.5, 1.0, g, f).unwrap()
    }

    #[test]
    fn detector_names_roundtrip() {
        for d in Detector::ALL {
            assert_eq!(Detector::parse(d.name()).unwrap(), d);
        }
        assert!(Detector::parse("energy").is_err());
    }

    #[test]
    fn detector_config_compatibility() {
        let ok = [
            (Detector::CsiEmpirical, cfg(0.0, 0.0)),
            (Detector::PcsiLaguerre, cfg(0.0, 1.0)),
            (Detector::PpcsiLaplace, cfg(1.0, 1.0)),
        ];
        for (d, c) in ok {
            assert!(Scenario::new(d, c, 10, 1).validate().is_ok(), "{d}");
        }
        let bad = [
            (Detector::CsiEmpirical, cfg(0.0, 1.0)),
            (Detector::PcsiLaguerre, cfg(1.0, 1.0)),
            (Detector::PcsiLaguerre, cfg(0.0, 0.0)),
            (Detector::PpcsiGaussian, cfg(0.0, 1.0)),
        ];
        for (d, c) in bad {
            assert!(
                matches!(
                    Scenario::new(d, c, 10, 1).validate(),
                    Err(McError::Scenario(_))
                ),
                "{d} should be rejected"
            );
        }
    }

    #[test]
    fn sweep_validation() {
        let mut s = Scenario::new(Detector::CsiEmpirical, cfg(0.0, 0.0), 10, 1);
        s.threshold_sweep = ThresholdSweep::Gammas(vec![0.5, 1.0, 2.0]);
        assert!(s.validate().is_ok());
        s.threshold_sweep = ThresholdSweep::Gammas(vec![2.0, 1.0]);
        assert!(s.validate().is_err());
        s.threshold_sweep = ThresholdSweep::TargetPf(vec![0.1, 0.5]);
        assert!(s.validate().is_ok());
        s.threshold_sweep = ThresholdSweep::TargetPf(vec![0.0]);
        assert!(s.validate().is_err());
        s.threshold_sweep = ThresholdSweep::Auto { points: 1 };
        assert!(s.validate().is_err());
    }
}
