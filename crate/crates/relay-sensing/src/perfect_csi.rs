//! Exact likelihood-ratio detector when both channel legs are known.
//!
//! With channels `g(l)`, `f(l)` in hand, the received symbol is complex
//! Gaussian with mean `0` (idle) or `μ(l) = g(l) f(l) s(l)` (active) and common
//! covariance `Σ(l) = σ²_V g(l)g(l)^H + σ²_W I`. The log likelihood ratio is
//! linear in the observation, giving the statistic
//! `T = Σ_l Re[μ(l)^H Σ⁻¹(l) y(l)]`, threshold `Γ = log γ + s/2` with
//! `s = Σ_l μ(l)^H Σ⁻¹(l) μ(l)`, and closed-form error probabilities.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal_model::{Hypothesis, SystemConfig};
use crate::stats::q_function;

/// Per-symbol detector model under perfect channel knowledge.
#[derive(Debug, Clone)]
pub struct PerfectCsiModel {
    mu: Vec<DVector<Complex64>>,
    sigma: Vec<DMatrix<Complex64>>,
    sigma_inv_mu: Vec<DVector<Complex64>>,
    s_total: f64,
    n_antennas: usize,
    frame_len: usize,
}

/// Builds the model from per-symbol channels.
///
/// `g` and `f` hold one entry per symbol, or a single entry reused for the
/// whole frame (block fading). The pilot from `cfg` scales the mean.
pub fn build_model(
    g: &[DMatrix<Complex64>],
    f: &[DVector<Complex64>],
    cfg: &SystemConfig,
) -> Result<PerfectCsiModel> {
    let (n, m, frame_len) = (cfg.n_antennas, cfg.n_relays, cfg.frame_len);
    if g.is_empty() || f.is_empty() {
        return Err(Error::Dimension("need at least one channel entry".into()));
    }
    for list_len in [g.len(), f.len()] {
        if list_len != 1 && list_len != frame_len {
            return Err(Error::Dimension(format!(
                "channel list covers {list_len} symbols, frame has {frame_len}"
            )));
        }
    }
    if cfg.sigma2_w <= 0.0 || cfg.sigma2_w.is_nan() {
        return Err(Error::Config(
            "sigma2_w must be positive to keep Sigma conditioned".into(),
        ));
    }

    let mut mu = Vec::with_capacity(frame_len);
    let mut sigma = Vec::with_capacity(frame_len);
    let mut sigma_inv_mu = Vec::with_capacity(frame_len);
    let mut s_total = 0.0;
    for l in 0..frame_len {
        let gl = &g[l.min(g.len() - 1)];
        let fl = &f[l.min(f.len() - 1)];
        if gl.nrows() != n || gl.ncols() != m || fl.len() != m {
            return Err(Error::Dimension(format!(
                "channel dimensions {}x{} / {} do not match N={n}, M={m}",
                gl.nrows(),
                gl.ncols(),
                fl.len()
            )));
        }
        if !gl
            .iter()
            .chain(fl.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::Domain("non-finite channel entry".into()));
        }
        let mu_l = gl * fl * cfg.pilot[l];
        let sigma_l = gl * gl.adjoint() * Complex64::new(cfg.sigma2_v, 0.0)
            + DMatrix::<Complex64>::identity(n, n) * Complex64::new(cfg.sigma2_w, 0.0);
        let chol = Cholesky::new(sigma_l.clone())
            .ok_or_else(|| Error::Domain("Sigma(l) not positive definite".into()))?;
        let w = chol.solve(&mu_l);
        s_total += mu_l.dotc(&w).re;
        mu.push(mu_l);
        sigma.push(sigma_l);
        sigma_inv_mu.push(w);
    }
    Ok(PerfectCsiModel {
        mu,
        sigma,
        sigma_inv_mu,
        s_total,
        n_antennas: n,
        frame_len,
    })
}

impl PerfectCsiModel {
    /// Total signal energy in whitened coordinates, `Σ_l μ^H Σ⁻¹ μ`.
    pub fn s_total(&self) -> f64 {
        self.s_total
    }

    /// Mean under the active hypothesis at symbol `l`.
    pub fn mu(&self, l: usize) -> &DVector<Complex64> {
        &self.mu[l]
    }

    /// Common covariance at symbol `l`.
    pub fn sigma(&self, l: usize) -> &DMatrix<Complex64> {
        &self.sigma[l]
    }

    fn check_frame(&self, y: &DMatrix<Complex64>) -> Result<()> {
        if y.nrows() != self.n_antennas || y.ncols() != self.frame_len {
            return Err(Error::Dimension(format!(
                "frame is {}x{}, model expects {}x{}",
                y.nrows(),
                y.ncols(),
                self.n_antennas,
                self.frame_len
            )));
        }
        Ok(())
    }
}

/// Test statistic `T(y) = Σ_l Re[μ(l)^H Σ⁻¹(l) y(l)]`; linear in `y`.
pub fn test_statistic(model: &PerfectCsiModel, y: &DMatrix<Complex64>) -> Result<f64> {
    model.check_frame(y)?;
    let mut t = 0.0;
    for l in 0..model.frame_len {
        t += model.sigma_inv_mu[l].dotc(&y.column(l).into_owned()).re;
    }
    Ok(t)
}

/// Critical value `Γ = log γ + s/2`.
pub fn threshold(model: &PerfectCsiModel, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Domain("gamma must be positive".into()));
    }
    Ok(gamma.ln() + model.s_total / 2.0)
}

/// Closed-form detection and false-alarm probabilities
/// `p_d = Q(√2 (log γ - s/2)/√s)`, `p_f = Q(√2 (log γ + s/2)/√s)`.
pub fn analytic_pd_pf(model: &PerfectCsiModel, gamma: f64) -> Result<(f64, f64)> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Domain("gamma must be positive".into()));
    }
    let s = model.s_total;
    if s <= 0.0 {
        return Err(Error::Degenerate(
            "s_total = 0: the statistic carries no signal".into(),
        ));
    }
    let lg = gamma.ln();
    let pd = q_function(std::f64::consts::SQRT_2 * (lg - s / 2.0) / s.sqrt());
    let pf = q_function(std::f64::consts::SQRT_2 * (lg + s / 2.0) / s.sqrt());
    Ok((pd, pf))
}

/// Bayes decision; ties (statistic exactly at the threshold) go to active.
pub fn decide(model: &PerfectCsiModel, y: &DMatrix<Complex64>, gamma: f64) -> Result<Hypothesis> {
    let t = test_statistic(model, y)?;
    let crit = threshold(model, gamma)?;
    Ok(if t >= crit {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    })
}
