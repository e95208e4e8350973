//! Stochastic system model and seeded frame generation.
//!
//! A frame is `L` symbols. At symbol `l` the receiver observes
//!
//! ```text
//! idle   : y(l) = G(l) v(l) + w(l)
//! active : y(l) = G(l) (F(l) s(l) + v(l)) + w(l)
//! ```
//!
//! with `G(l)` the N×M relay-to-receiver channel, `F(l)` the M×1
//! transmitter-to-relay channel, `v`/`w` relay and receiver noise, and `s(l)`
//! the known pilot. The receiver holds noisy channel estimates: conditioned on
//! the estimates, `G(l) ~ CN(Ḡ(l), σ²_G)` entrywise and `F(l) ~ CN(F̄(l),
//! σ²_F I)`. Setting an error variance to zero reproduces perfect knowledge;
//! a zero-mean estimate with unit variance is blind sensing on that leg.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{sample_cn_matrix, sample_cn_vector, substream};

/// Idle/active hypothesis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Band idle: no transmission.
    H0,
    /// Band occupied: primary transmitter active.
    H1,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hypothesis::H0 => write!(f, "H0"),
            Hypothesis::H1 => write!(f, "H1"),
        }
    }
}

/// Decision costs `C[decide][truth]`; the Bayes test needs `C10 > C00` and
/// `C01 > C11`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct CostMatrix {
    pub c00: f64,
    pub c10: f64,
    pub c01: f64,
    pub c11: f64,
}

impl CostMatrix {
    /// 0/1 costs: unit cost for either error, none for correct decisions.
    pub fn zero_one() -> Self {
        CostMatrix {
            c00: 0.0,
            c10: 1.0,
            c01: 1.0,
            c11: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c00", self.c00),
            ("c10", self.c10),
            ("c01", self.c01),
            ("c11", self.c11),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("cost {name} must be finite")));
            }
        }
        if self.c10 <= self.c00 || self.c01 <= self.c11 {
            return Err(Error::Config(
                "degenerate costs: need c10 > c00 and c01 > c11".into(),
            ));
        }
        Ok(())
    }
}

/// Dimensions, noise and channel-error variances, pilot, prior, and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Receive antennas N.
    pub n_antennas: usize,
    /// Relays M.
    pub n_relays: usize,
    /// Symbols per frame L.
    pub frame_len: usize,
    /// Relay noise variance σ²_V (> 0).
    pub sigma2_v: f64,
    /// Receiver noise variance σ²_W (> 0).
    pub sigma2_w: f64,
    /// Relay-to-receiver channel estimation-error variance σ²_G (≥ 0).
    pub sigma2_g: f64,
    /// Transmitter-to-relay channel estimation-error variance σ²_F (≥ 0).
    pub sigma2_f: f64,
    /// Pilot sequence s(1..L); all-ones by default.
    pub pilot: Vec<Complex64>,
    /// Prior probability that the band is occupied, in (0,1).
    pub prior_h1: f64,
    /// Decision costs.
    pub costs: CostMatrix,
}

impl SystemConfig {
    /// Config with the all-ones pilot, equal priors, and 0/1 costs.
    pub fn new(
        n_antennas: usize,
        n_relays: usize,
        frame_len: usize,
        sigma2_v: f64,
        sigma2_w: f64,
        sigma2_g: f64,
        sigma2_f: f64,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            n_antennas,
            n_relays,
            frame_len,
            sigma2_v,
            sigma2_w,
            sigma2_g,
            sigma2_f,
            pilot: vec![Complex64::new(1.0, 0.0); frame_len],
            prior_h1: 0.5,
            costs: CostMatrix::zero_one(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the structural invariants; call after mutating fields directly.
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_relays == 0 || self.frame_len == 0 {
            return Err(Error::Config("dimensions must be positive".into()));
        }
        if self.sigma2_v.is_nan()
            || self.sigma2_w.is_nan()
            || self.sigma2_v <= 0.0
            || self.sigma2_w <= 0.0
        {
            return Err(Error::Config(
                "noise variances must be strictly positive".into(),
            ));
        }
        if self.sigma2_g.is_nan()
            || self.sigma2_f.is_nan()
            || self.sigma2_g < 0.0
            || self.sigma2_f < 0.0
        {
            return Err(Error::Config(
                "estimation-error variances must be nonnegative".into(),
            ));
        }
        if self.pilot.len() != self.frame_len {
            return Err(Error::Config(format!(
                "pilot length {} does not match frame length {}",
                self.pilot.len(),
                self.frame_len
            )));
        }
        if !self
            .pilot
            .iter()
            .all(|s| s.re.is_finite() && s.im.is_finite())
        {
            return Err(Error::Config("pilot symbols must be finite".into()));
        }
        if self.prior_h1.is_nan() || self.prior_h1 <= 0.0 || self.prior_h1 >= 1.0 {
            return Err(Error::Config("prior_h1 must lie in (0,1)".into()));
        }
        self.costs.validate()?;
        // The Bayes threshold these fields induce must be finite and positive.
        let gamma = bayes_gamma_unchecked(self);
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(
                "priors/costs induce a degenerate threshold".into(),
            ));
        }
        Ok(())
    }

    /// Reads a config from a TOML file with keys mirroring the field names.
    ///
    /// `pilot`, `prior_h1`, and `costs` are optional (all-ones, 0.5, and 0/1
    /// costs respectively); pilot entries may be reals or `[re, im]` pairs.
    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses a config from TOML text; see [`SystemConfig::from_toml_path`].
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        let pilot = match raw.pilot {
            None => vec![Complex64::new(1.0, 0.0); raw.frame_len],
            Some(entries) => entries.into_iter().map(PilotEntry::into_complex).collect(),
        };
        let cfg = SystemConfig {
            n_antennas: raw.n_antennas,
            n_relays: raw.n_relays,
            frame_len: raw.frame_len,
            sigma2_v: raw.sigma2_v,
            sigma2_w: raw.sigma2_w,
            sigma2_g: raw.sigma2_g,
            sigma2_f: raw.sigma2_f,
            pilot,
            prior_h1: raw.prior_h1.unwrap_or(0.5),
            costs: raw.costs.unwrap_or_else(CostMatrix::zero_one),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Deserialize)]
struct RawConfig {
    n_antennas: usize,
    n_relays: usize,
    frame_len: usize,
    sigma2_v: f64,
    sigma2_w: f64,
    #[serde(default)]
    sigma2_g: f64,
    #[serde(default)]
    sigma2_f: f64,
    pilot: Option<Vec<PilotEntry>>,
    prior_h1: Option<f64>,
    costs: Option<CostMatrix>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PilotEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl PilotEntry {
    fn into_complex(self) -> Complex64 {
        match self {
            PilotEntry::Real(re) => Complex64::new(re, 0.0),
            PilotEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Channel estimates Ḡ(l), F̄(l) held by the receiver.
///
/// Block fading keeps one estimate for the whole frame; per-symbol estimates
/// are supported because the channels may change from symbol to symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimates {
    g_bar: Vec<DMatrix<Complex64>>,
    f_bar: Vec<DVector<Complex64>>,
}

impl ChannelEstimates {
    /// One estimate pair used for every symbol (block fading).
    pub fn constant(g_bar: DMatrix<Complex64>, f_bar: DVector<Complex64>) -> Self {
        ChannelEstimates {
            g_bar: vec![g_bar],
            f_bar: vec![f_bar],
        }
    }

    /// Independent estimates per symbol; both lists must share their length.
    pub fn per_symbol(
        g_bar: Vec<DMatrix<Complex64>>,
        f_bar: Vec<DVector<Complex64>>,
    ) -> Result<Self> {
        if g_bar.is_empty() || g_bar.len() != f_bar.len() {
            return Err(Error::Dimension(
                "per-symbol estimates need equal, nonzero lengths".into(),
            ));
        }
        Ok(ChannelEstimates { g_bar, f_bar })
    }

    /// Zero-mean estimates (blind sensing) with the given dimensions.
    pub fn blind(n_antennas: usize, n_relays: usize) -> Self {
        ChannelEstimates::constant(
            DMatrix::zeros(n_antennas, n_relays),
            DVector::zeros(n_relays),
        )
    }

    /// Estimate Ḡ(l); a single block-fading estimate serves every symbol.
    pub fn g(&self, l: usize) -> &DMatrix<Complex64> {
        &self.g_bar[l.min(self.g_bar.len() - 1)]
    }

    /// Estimate F̄(l).
    pub fn f(&self, l: usize) -> &DVector<Complex64> {
        &self.f_bar[l.min(self.f_bar.len() - 1)]
    }

    fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let (n, m) = (cfg.n_antennas, cfg.n_relays);
        if self.g_bar.len() > 1 && self.g_bar.len() != cfg.frame_len {
            return Err(Error::Dimension(format!(
                "estimates cover {} symbols but the frame has {}",
                self.g_bar.len(),
                cfg.frame_len
            )));
        }
        for (g, f) in self.g_bar.iter().zip(&self.f_bar) {
            if g.nrows() != n || g.ncols() != m || f.len() != m {
                return Err(Error::Dimension(format!(
                    "estimate dimensions {}x{} / {} do not match N={n}, M={m}",
                    g.nrows(),
                    g.ncols(),
                    f.len()
                )));
            }
            if !g
                .iter()
                .chain(f.iter())
                .all(|z| z.re.is_finite() && z.im.is_finite())
            {
                return Err(Error::Domain("channel estimates must be finite".into()));
            }
        }
        Ok(())
    }
}

/// One synthetic frame plus the latent draws that generated it.
///
/// The draws are retained so tests can recompute `y` and so detectors that
/// assume perfect knowledge of a channel leg can be handed its realization.
#[derive(Debug, Clone)]
pub struct FrameObservation {
    /// Received N×L block.
    pub y: DMatrix<Complex64>,
    /// Hypothesis the frame was generated under.
    pub truth: Hypothesis,
    /// Realized channel G(l), one entry per symbol.
    pub drawn_g: Vec<DMatrix<Complex64>>,
    /// Realized channel F(l), one entry per symbol.
    pub drawn_f: Vec<DVector<Complex64>>,
    /// Relay noise, M×L.
    pub drawn_v: DMatrix<Complex64>,
    /// Receiver noise, N×L.
    pub drawn_w: DMatrix<Complex64>,
}

// Component tags for per-symbol draw substreams.
const TAG_G: u64 = 0xA1;
const TAG_F: u64 = 0xA2;
const TAG_V: u64 = 0xA3;
const TAG_W: u64 = 0xA4;

/// Draws one frame under `truth`, deterministically in `seed`.
///
/// Channels and noises are independent across symbols and entries:
/// `G(l) ~ CN(Ḡ(l), σ²_G)` per entry, `F(l) ~ CN(F̄(l), σ²_F I)`,
/// `V(l) ~ CN(0, σ²_V I)`, `W(l) ~ CN(0, σ²_W I)`. Each (symbol, component)
/// pair draws from its own counter-derived stream, so frames are reproducible
/// regardless of symbol evaluation order.
pub fn sample_frame(
    cfg: &SystemConfig,
    est: &ChannelEstimates,
    truth: Hypothesis,
    seed: u64,
) -> Result<FrameObservation> {
    cfg.validate()?;
    est.validate(cfg)?;
    let (n, m, frame_len) = (cfg.n_antennas, cfg.n_relays, cfg.frame_len);
    let zero_m = DVector::zeros(m);
    let zero_n = DVector::zeros(n);

    let mut y = DMatrix::zeros(n, frame_len);
    let mut drawn_g = Vec::with_capacity(frame_len);
    let mut drawn_f = Vec::with_capacity(frame_len);
    let mut drawn_v = DMatrix::zeros(m, frame_len);
    let mut drawn_w = DMatrix::zeros(n, frame_len);

    for l in 0..frame_len {
        let ll = l as u64;
        let g = sample_cn_matrix(&mut substream(seed, &[ll, TAG_G]), est.g(l), cfg.sigma2_g);
        let f = sample_cn_vector(&mut substream(seed, &[ll, TAG_F]), est.f(l), cfg.sigma2_f);
        let v = sample_cn_vector(&mut substream(seed, &[ll, TAG_V]), &zero_m, cfg.sigma2_v);
        let w = sample_cn_vector(&mut substream(seed, &[ll, TAG_W]), &zero_n, cfg.sigma2_w);

        let relay_out = match truth {
            Hypothesis::H0 => v.clone(),
            Hypothesis::H1 => &f * cfg.pilot[l] + &v,
        };
        let col = &g * relay_out + &w;
        y.set_column(l, &col);
        drawn_v.set_column(l, &v);
        drawn_w.set_column(l, &w);
        drawn_g.push(g);
        drawn_f.push(f);
    }

    Ok(FrameObservation {
        y,
        truth,
        drawn_g,
        drawn_f,
        drawn_v,
        drawn_w,
    })
}

/// Receive SNR in dB: `10·log10(1/(σ²_V + σ²_W/M))`, the average received
/// signal power over the average noise power under unit-power fading priors.
pub fn receive_snr_db(cfg: &SystemConfig) -> Result<f64> {
    if cfg.sigma2_v <= 0.0 || cfg.sigma2_w <= 0.0 {
        return Err(Error::Domain(
            "SNR needs strictly positive noise variances".into(),
        ));
    }
    Ok(10.0 * (1.0 / (cfg.sigma2_v + cfg.sigma2_w / cfg.n_relays as f64)).log10())
}

/// Noise variances realizing a target receive SNR.
///
/// Splits the total noise budget `P = 10^(-snr_db/10)` as
/// `σ²_V = relay_fraction·P` and `σ²_W = (1-relay_fraction)·P·M`, so
/// `σ²_V + σ²_W/M = P` exactly for any `relay_fraction` in (0,1).
pub fn noise_for_snr_db(snr_db: f64, n_relays: usize, relay_fraction: f64) -> Result<(f64, f64)> {
    if relay_fraction.is_nan() || relay_fraction <= 0.0 || relay_fraction >= 1.0 {
        return Err(Error::Domain("relay_fraction must lie in (0,1)".into()));
    }
    if n_relays == 0 || !snr_db.is_finite() {
        return Err(Error::Domain("need n_relays >= 1 and finite snr_db".into()));
    }
    let p = 10f64.powf(-snr_db / 10.0);
    Ok((
        relay_fraction * p,
        (1.0 - relay_fraction) * p * n_relays as f64,
    ))
}

fn bayes_gamma_unchecked(cfg: &SystemConfig) -> f64 {
    let prior_ratio = (1.0 - cfg.prior_h1) / cfg.prior_h1;
    prior_ratio * (cfg.costs.c10 - cfg.costs.c00) / (cfg.costs.c01 - cfg.costs.c11)
}

/// Bayes-risk threshold `γ = P(H0)/P(H1) · (C10-C00)/(C01-C11)` for the
/// likelihood-ratio test.
pub fn bayes_gamma(cfg: &SystemConfig) -> Result<f64> {
    cfg.costs.validate()?;
    if cfg.prior_h1.is_nan() || cfg.prior_h1 <= 0.0 || cfg.prior_h1 >= 1.0 {
        return Err(Error::Domain("prior_h1 must lie in (0,1)".into()));
    }
    Ok(bayes_gamma_unchecked(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn demo_estimates(n: usize, m: usize) -> ChannelEstimates {
        let g = DMatrix::from_fn(n, m, |i, j| cx(0.3 + i as f64 * 0.2, 0.1 * j as f64 - 0.2));
        let f = DVector::from_fn(m, |i, _| cx(0.8 - 0.1 * i as f64, 0.25 * i as f64));
        ChannelEstimates::constant(g, f)
    }

    #[test]
    fn noiseless_active_frame_is_gbar_fbar() {
        let mut cfg = SystemConfig::new(3, 2, 2, 1.0, 1.0, 0.0, 0.0).unwrap();
        cfg.sigma2_v = 1e-300; // strictly positive per config contract
        cfg.sigma2_w = 1e-300;
        let est = demo_estimates(3, 2);
        let frame = sample_frame(&cfg, &est, Hypothesis::H1, 123).unwrap();
        for l in 0..2 {
            let expect = est.g(l) * est.f(l);
            let got = frame.y.column(l);
            for i in 0..3 {
                assert_relative_eq!(got[i].re, expect[i].re, epsilon = 1e-9);
                assert_relative_eq!(got[i].im, expect[i].im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_idle_frame_is_zero() {
        let mut cfg = SystemConfig::new(2, 2, 1, 1.0, 1.0, 0.0, 0.0).unwrap();
        cfg.sigma2_v = 1e-300;
        cfg.sigma2_w = 1e-300;
        let est = demo_estimates(2, 2);
        let frame = sample_frame(&cfg, &est, Hypothesis::H0, 5).unwrap();
        assert!(frame.y.iter().all(|z| z.norm() < 1e-100));
    }

    #[test]
    fn frame_recomputes_from_retained_draws() {
        let cfg = SystemConfig::new(2, 3, 4, 0.5, 1.0, 0.2, 0.7).unwrap();
        let est = demo_estimates(2, 3);
        for truth in [Hypothesis::H0, Hypothesis::H1] {
            let fr = sample_frame(&cfg, &est, truth, 42).unwrap();
            for l in 0..cfg.frame_len {
                let v = fr.drawn_v.column(l).into_owned();
                let relay = match truth {
                    Hypothesis::H0 => v,
                    Hypothesis::H1 => &fr.drawn_f[l] * cfg.pilot[l] + v,
                };
                let expect = &fr.drawn_g[l] * relay + fr.drawn_w.column(l).into_owned();
                let diff: f64 = (fr.y.column(l) - expect).iter().map(|z| z.norm()).sum();
                assert!(diff < 1e-12, "frame not reproducible from draws: {diff}");
            }
        }
    }

    #[test]
    fn frames_are_reproducible_bitwise() {
        let cfg = SystemConfig::new(2, 2, 3, 0.5, 1.0, 0.3, 0.4).unwrap();
        let est = demo_estimates(2, 2);
        let a = sample_frame(&cfg, &est, Hypothesis::H1, 99).unwrap();
        let b = sample_frame(&cfg, &est, Hypothesis::H1, 99).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.drawn_g, b.drawn_g);
        let c = sample_frame(&cfg, &est, Hypothesis::H1, 100).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn sample_mean_under_h1_matches_gbar_fbar() {
        // Monte Carlo mean of y vs the first-moment formula, 4 standard errors.
        let cfg = SystemConfig::new(2, 2, 1, 0.4, 0.8, 0.5, 0.9).unwrap();
        let est = demo_estimates(2, 2);
        let n = 100_000;
        let mut sum = DVector::<Complex64>::zeros(2);
        for seed in 0..n {
            let fr = sample_frame(&cfg, &est, Hypothesis::H1, seed).unwrap();
            sum += fr.y.column(0);
        }
        let mean = sum / Complex64::new(n as f64, 0.0);
        let expect = est.g(0) * est.f(0);
        // Var(y_i) per complex entry; each real part has half of it.
        let b = DMatrix::<Complex64>::identity(2, 2)
            * Complex64::new(cfg.sigma2_v + cfg.sigma2_f, 0.0)
            + est.f(0) * est.f(0).adjoint();
        let cov = est.g(0) * &b * est.g(0).adjoint()
            + DMatrix::<Complex64>::identity(2, 2)
                * (b.trace() * Complex64::new(cfg.sigma2_g, 0.0)
                    + Complex64::new(cfg.sigma2_w, 0.0))
            - expect.clone() * expect.adjoint();
        for i in 0..2 {
            let se = (cov[(i, i)].re / 2.0 / n as f64).sqrt();
            assert!((mean[i].re - expect[i].re).abs() < 4.0 * se);
            assert!((mean[i].im - expect[i].im).abs() < 4.0 * se);
        }
    }

    #[test]
    fn empirical_h0_covariance_matches_lemma() {
        // Perfect-CSI channels: cov(y|H0) = s2v g g^H + s2w I.
        let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 0.0).unwrap();
        let est = demo_estimates(2, 2);
        let n = 100_000;
        let mut acc = DMatrix::<Complex64>::zeros(2, 2);
        for seed in 0..n {
            let fr = sample_frame(&cfg, &est, Hypothesis::H0, seed).unwrap();
            let y = fr.y.column(0);
            acc += y * y.adjoint();
        }
        let emp = acc / Complex64::new(n as f64, 0.0);
        let expect = est.g(0) * est.g(0).adjoint() * Complex64::new(cfg.sigma2_v, 0.0)
            + DMatrix::<Complex64>::identity(2, 2) * Complex64::new(cfg.sigma2_w, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let scale = (expect[(i, i)].re * expect[(j, j)].re).sqrt();
                let tol = 4.0 * scale / (n as f64).sqrt() + 1e-12;
                assert!(
                    (emp[(i, j)] - expect[(i, j)]).norm() < 2.0 * tol,
                    "cov entry ({i},{j}) off: {} vs {}",
                    emp[(i, j)],
                    expect[(i, j)]
                );
            }
        }
    }

    #[test]
    fn symbols_are_uncorrelated() {
        let cfg = SystemConfig::new(1, 2, 2, 0.5, 1.0, 0.4, 0.6).unwrap();
        let est = demo_estimates(1, 2);
        let n = 100_000;
        let mut cross = Complex64::new(0.0, 0.0);
        let mut m0 = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        for seed in 0..n {
            let fr = sample_frame(&cfg, &est, Hypothesis::H1, seed).unwrap();
            m0 += fr.y[(0, 0)];
            m1 += fr.y[(0, 1)];
            cross += fr.y[(0, 0)] * fr.y[(0, 1)].conj();
        }
        let nf = Complex64::new(n as f64, 0.0);
        let cc = cross / nf - (m0 / nf) * (m1 / nf).conj();
        assert!(cc.norm() < 0.05, "cross-covariance {cc}");
    }

    #[test]
    fn snr_examples() {
        let mut cfg = SystemConfig::new(1, 2, 1, 0.5, 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(receive_snr_db(&cfg).unwrap(), 0.0, epsilon = 1e-12);
        cfg.n_relays = 10;
        cfg.sigma2_v = 0.05;
        cfg.sigma2_w = 0.5;
        assert_relative_eq!(receive_snr_db(&cfg).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn snr_calibration_helper_closes_the_loop() {
        for (snr, m, frac) in [(0.0, 2, 0.5), (0.0, 8, 0.25), (-3.0, 4, 0.7), (5.0, 3, 0.5)] {
            let (s2v, s2w) = noise_for_snr_db(snr, m, frac).unwrap();
            let budget = s2v + s2w / m as f64;
            assert_relative_eq!(budget, 10f64.powf(-snr / 10.0), epsilon = 1e-12);
            let mut cfg = SystemConfig::new(1, m, 1, s2v, s2w, 0.0, 0.0).unwrap();
            cfg.sigma2_v = s2v;
            assert_relative_eq!(receive_snr_db(&cfg).unwrap(), snr, epsilon = 1e-10);
        }
    }

    #[test]
    fn bayes_gamma_examples() {
        let mut cfg = SystemConfig::new(1, 1, 1, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(bayes_gamma(&cfg).unwrap(), 1.0);
        cfg.prior_h1 = 0.2;
        assert_relative_eq!(bayes_gamma(&cfg).unwrap(), 4.0);
        cfg.prior_h1 = 0.5;
        cfg.costs = CostMatrix {
            c00: 0.0,
            c10: 2.0,
            c01: 1.0,
            c11: 0.0,
        };
        assert_relative_eq!(bayes_gamma(&cfg).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_costs_rejected() {
        let mut cfg = SystemConfig::new(1, 1, 1, 1.0, 1.0, 0.0, 0.0).unwrap();
        cfg.costs = CostMatrix {
            c00: 1.0,
            c10: 1.0,
            c01: 1.0,
            c11: 0.0,
        };
        assert!(matches!(bayes_gamma(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let cfg = SystemConfig::new(3, 2, 1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let est = demo_estimates(2, 2); // wrong antenna count
        assert!(sample_frame(&cfg, &est, Hypothesis::H0, 1).is_err());
    }

    #[test]
    fn toml_roundtrip_with_defaults() {
        let cfg = SystemConfig::from_toml_str(
            r#"
            n_antennas = 2
            n_relays = 4
            frame_len = 3
            sigma2_v = 0.5
            sigma2_w = 1.0
            sigma2_f = 1.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.n_antennas, 2);
        assert_eq!(cfg.pilot, vec![Complex64::new(1.0, 0.0); 3]);
        assert_eq!(cfg.prior_h1, 0.5);
        assert_eq!(cfg.costs, CostMatrix::zero_one());
        assert_eq!(cfg.sigma2_g, 0.0);

        let full = SystemConfig::from_toml_str(
            r#"
            n_antennas = 1
            n_relays = 2
            frame_len = 2
            sigma2_v = 0.5
            sigma2_w = 1.0
            sigma2_g = 0.1
            sigma2_f = 0.2
            pilot = [1.0, [0.0, 1.0]]
            prior_h1 = 0.3
            costs = { c00 = 0.0, c10 = 2.0, c01 = 1.0, c11 = 0.0 }
            "#,
        )
        .unwrap();
        assert_eq!(full.pilot[1], Complex64::new(0.0, 1.0));
        assert_relative_eq!(bayes_gamma(&full).unwrap(), (0.7 / 0.3) * 2.0);
    }
}
