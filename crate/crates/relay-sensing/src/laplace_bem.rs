//! Laplace-approximated marginal likelihood with the posterior mode located
//! by Bayesian expectation-maximization.
//!
//! Per received symbol the marginal likelihood integrates the latent relay
//! output `r` out of
//!
//! ```text
//! p(y | r) = CN(y; Ḡ r, (σ²_G ‖r‖² + σ²_W) I)
//! p(r)     = CN(r; R̄, σ²_R I)        R̄ = 0, σ²_R = σ²_V           (idle)
//!                                    R̄ = F̄ s, σ²_R = σ²_F + σ²_V  (active)
//! ```
//!
//! The integral has no closed form; around the posterior mode `r̂` it is
//! approximated by `p̂(y) = exp(h(r̂)) |2π (-H)⁻¹|^{1/2}` with
//! `h(r) = log p(y|r) + log p(r)` and `H` its Hessian over the 2M real
//! coordinates (negative definite at a proper maximum). The mode itself comes
//! from an expectation-maximization iteration over the latent channel `G`,
//! which ascends `h` monotonically: the E step is the exact Gaussian posterior
//! of `G` given `(y, r̂ⁿ)`, the M step a ridge-regularized solve.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian_approx::{build_ga_model, ga_decide};
use crate::partial_csi;
use crate::signal_model::{ChannelEstimates, Hypothesis, SystemConfig};

/// One-symbol latent-posterior problem: observation, estimate, and prior.
#[derive(Debug, Clone)]
pub struct LatentPosteriorProblem {
    pub y: DVector<Complex64>,
    pub g_bar: DMatrix<Complex64>,
    pub r_bar: DVector<Complex64>,
    /// Prior variance of the relay output (hypothesis dependent).
    pub sigma2_r: f64,
    pub sigma2_g: f64,
    pub sigma2_w: f64,
}

impl LatentPosteriorProblem {
    pub fn new(
        y: DVector<Complex64>,
        g_bar: DMatrix<Complex64>,
        r_bar: DVector<Complex64>,
        sigma2_r: f64,
        sigma2_g: f64,
        sigma2_w: f64,
    ) -> Result<Self> {
        if g_bar.nrows() != y.len() || g_bar.ncols() != r_bar.len() {
            return Err(Error::Dimension(
                "observation/estimate/prior dimensions disagree".into(),
            ));
        }
        if sigma2_r.is_nan()
            || sigma2_g.is_nan()
            || sigma2_w.is_nan()
            || sigma2_r <= 0.0
            || sigma2_w <= 0.0
            || sigma2_g < 0.0
        {
            return Err(Error::Config(
                "need sigma2_r > 0, sigma2_w > 0, sigma2_g >= 0".into(),
            ));
        }
        Ok(LatentPosteriorProblem {
            y,
            g_bar,
            r_bar,
            sigma2_r,
            sigma2_g,
            sigma2_w,
        })
    }

    /// Problem for symbol `l` of a frame under the given hypothesis.
    pub fn for_symbol(
        y_frame: &DMatrix<Complex64>,
        est: &ChannelEstimates,
        cfg: &SystemConfig,
        l: usize,
        hypothesis: Hypothesis,
    ) -> Result<Self> {
        if l >= y_frame.ncols() || l >= cfg.frame_len {
            return Err(Error::Dimension(format!("symbol index {l} out of range")));
        }
        let (r_bar, sigma2_r) = match hypothesis {
            Hypothesis::H0 => (DVector::zeros(cfg.n_relays), cfg.sigma2_v),
            Hypothesis::H1 => (est.f(l) * cfg.pilot[l], cfg.sigma2_f + cfg.sigma2_v),
        };
        LatentPosteriorProblem::new(
            y_frame.column(l).into_owned(),
            est.g(l).clone(),
            r_bar,
            sigma2_r,
            cfg.sigma2_g,
            cfg.sigma2_w,
        )
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn m(&self) -> usize {
        self.r_bar.len()
    }

    /// Likelihood variance `v(r) = σ²_G ‖r‖² + σ²_W`.
    fn likelihood_var(&self, r: &DVector<Complex64>) -> f64 {
        self.sigma2_g * r.norm_squared() + self.sigma2_w
    }
}

/// Solver state after an expectation-maximization run.
#[derive(Debug, Clone)]
pub struct BemState {
    /// Current mode estimate.
    pub r_hat: DVector<Complex64>,
    /// Iterations performed.
    pub iterations: usize,
    /// `h(r̂)`, the log joint at the estimate.
    pub objective: f64,
    /// Whether the step-size criterion was met within the budget.
    pub converged: bool,
}

/// Log joint density `h(r) = log p(y|r) + log p(r)`, fully normalized.
pub fn log_joint(problem: &LatentPosteriorProblem, r: &DVector<Complex64>) -> f64 {
    let v = problem.likelihood_var(r);
    let resid = (&problem.y - &problem.g_bar * r).norm_squared();
    let prior_dev = (r - &problem.r_bar).norm_squared();
    let pi = std::f64::consts::PI;
    -(problem.n() as f64) * (pi * v).ln()
        - resid / v
        - (problem.m() as f64) * (pi * problem.sigma2_r).ln()
        - prior_dev / problem.sigma2_r
}

/// Real representation `[[Re A, -Im A], [Im A, Re A]]` of a complex matrix.
fn real_rep(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), a.ncols());
    let mut out = DMatrix::zeros(2 * n, 2 * m);
    for i in 0..n {
        for j in 0..m {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + m)] = -z.im;
            out[(i + n, j)] = z.im;
            out[(i + n, j + m)] = z.re;
        }
    }
    out
}

fn real_coords(r: &DVector<Complex64>) -> DVector<f64> {
    let m = r.len();
    DVector::from_fn(2 * m, |i, _| if i < m { r[i].re } else { r[i - m].im })
}

fn complex_coords(x: &DVector<f64>) -> DVector<Complex64> {
    let m = x.len() / 2;
    DVector::from_fn(m, |i, _| Complex64::new(x[i], x[i + m]))
}

/// Gradient of `h` over the 2M real coordinates `(Re r, Im r)`.
pub fn grad_log_joint(problem: &LatentPosteriorProblem, r: &DVector<Complex64>) -> DVector<f64> {
    let x = real_coords(r);
    let x_bar = real_coords(&problem.r_bar);
    let a = real_rep(&problem.g_bar);
    let yt = {
        let n = problem.n();
        DVector::from_fn(2 * n, |i, _| {
            if i < n {
                problem.y[i].re
            } else {
                problem.y[i - n].im
            }
        })
    };
    let v = problem.sigma2_g * x.norm_squared() + problem.sigma2_w;
    let e = &yt - &a * &x;
    let s = e.norm_squared();
    let grad_v = 2.0 * problem.sigma2_g * &x;
    let grad_s = -2.0 * a.transpose() * &e;
    -(problem.n() as f64) / v * &grad_v - &grad_s / v + (s / (v * v)) * &grad_v
        - (2.0 / problem.sigma2_r) * (&x - &x_bar)
}

/// Analytic Hessian of `h` over the 2M real coordinates.
pub fn hessian_log_joint(problem: &LatentPosteriorProblem, r: &DVector<Complex64>) -> DMatrix<f64> {
    let x = real_coords(r);
    let a = real_rep(&problem.g_bar);
    let n = problem.n();
    let yt = DVector::from_fn(2 * n, |i, _| {
        if i < n {
            problem.y[i].re
        } else {
            problem.y[i - n].im
        }
    });
    let dim = 2 * problem.m();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let v = problem.sigma2_g * x.norm_squared() + problem.sigma2_w;
    let e = &yt - &a * &x;
    let s = e.norm_squared();
    let grad_v = 2.0 * problem.sigma2_g * &x;
    let hess_v = 2.0 * problem.sigma2_g * &eye;
    let grad_s = -2.0 * a.transpose() * &e;
    let hess_s = 2.0 * a.transpose() * &a;

    let nf = problem.n() as f64;
    let mut h = -nf * (&hess_v / v - &grad_v * grad_v.transpose() / (v * v));
    h += -&hess_s / v
        + (&grad_s * grad_v.transpose() + &grad_v * grad_s.transpose()) / (v * v)
        + s * &hess_v / (v * v)
        - 2.0 * s * &grad_v * grad_v.transpose() / (v * v * v);
    h -= 2.0 / problem.sigma2_r * &eye;
    // Exact symmetry despite rounding.
    (&h + h.transpose()) * 0.5
}

/// Central-finite-difference Hessian of `h`, step `1e-5·(1+‖r‖)`.
pub fn hessian_log_joint_fd(
    problem: &LatentPosteriorProblem,
    r: &DVector<Complex64>,
) -> DMatrix<f64> {
    let x0 = real_coords(r);
    let dim = x0.len();
    let step = 1e-5 * (1.0 + x0.norm());
    let f = |x: &DVector<f64>| log_joint(problem, &complex_coords(x));
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let mut xpp = x0.clone();
            let mut xpm = x0.clone();
            let mut xmp = x0.clone();
            let mut xmm = x0.clone();
            xpp[i] += step;
            xpp[j] += step;
            xpm[i] += step;
            xpm[j] -= step;
            xmp[i] -= step;
            xmp[j] += step;
            xmm[i] -= step;
            xmm[j] -= step;
            let val = (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * step * step);
            h[(i, j)] = val;
            h[(j, i)] = val;
        }
    }
    h
}

/// E step: exact posterior mean `Φ₁ = E[G | y, r̂]` and second moment
/// `Φ₂ = E[G^H G | y, r̂]` of the latent channel,
///
/// ```text
/// Φ₁ = Ḡ + (y - Ḡ r̂) r̂^H / (‖r̂‖² + σ²_W/σ²_G)
/// Φ₂ = Φ₁^H Φ₁ + σ²_G N (I - r̂ r̂^H / (‖r̂‖² + σ²_W/σ²_G))
/// ```
///
/// with the exact limit `Φ₁ = Ḡ`, `Φ₂ = Ḡ^H Ḡ` at `σ²_G = 0`.
pub fn bem_e_step(
    problem: &LatentPosteriorProblem,
    r_hat: &DVector<Complex64>,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    if problem.sigma2_g == 0.0 {
        return (
            problem.g_bar.clone(),
            problem.g_bar.adjoint() * &problem.g_bar,
        );
    }
    let m = problem.m();
    let denom = r_hat.norm_squared() + problem.sigma2_w / problem.sigma2_g;
    let innovation = &problem.y - &problem.g_bar * r_hat;
    let phi1 = &problem.g_bar + &innovation * r_hat.adjoint() / Complex64::new(denom, 0.0);
    let shrink =
        DMatrix::<Complex64>::identity(m, m) - r_hat * r_hat.adjoint() / Complex64::new(denom, 0.0);
    let phi2 = phi1.adjoint() * &phi1
        + shrink * Complex64::new(problem.sigma2_g * problem.n() as f64, 0.0);
    (phi1, phi2)
}

/// M step: unique maximizer of the E-step surrogate,
/// `r = (Φ₂ + (σ²_W/σ²_R) I)⁻¹ (Φ₁^H y + R̄ σ²_W/σ²_R)`.
pub fn bem_m_step(
    problem: &LatentPosteriorProblem,
    phi1: &DMatrix<Complex64>,
    phi2: &DMatrix<Complex64>,
) -> Result<DVector<Complex64>> {
    let ridge = problem.sigma2_w / problem.sigma2_r;
    let m = problem.m();
    let lhs = phi2 + DMatrix::<Complex64>::identity(m, m) * Complex64::new(ridge, 0.0);
    let rhs = phi1.adjoint() * &problem.y + &problem.r_bar * Complex64::new(ridge, 0.0);
    let chol = Cholesky::new(lhs)
        .ok_or_else(|| Error::Domain("ridge system lost positive definiteness".into()))?;
    Ok(chol.solve(&rhs))
}

/// Runs the expectation-maximization ascent from the prior mean `R̄` until
/// `‖r̂ⁿ⁺¹ - r̂ⁿ‖ ≤ tol·(1 + ‖r̂ⁿ‖)` or `max_iter`.
pub fn bem_solve(problem: &LatentPosteriorProblem, max_iter: usize, tol: f64) -> Result<BemState> {
    if max_iter == 0 || tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain("need max_iter >= 1 and tol > 0".into()));
    }
    bem_solve_from(problem, problem.r_bar.clone(), max_iter, tol)
}

/// Single-start solve from an explicit initial point.
pub fn bem_solve_from(
    problem: &LatentPosteriorProblem,
    start: DVector<Complex64>,
    max_iter: usize,
    tol: f64,
) -> Result<BemState> {
    let mut r = start;
    let mut objective = log_joint(problem, &r);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        let (phi1, phi2) = bem_e_step(problem, &r);
        let next = bem_m_step(problem, &phi1, &phi2)?;
        if !next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Divergence { iteration: it });
        }
        let step = (&next - &r).norm();
        let scale = 1.0 + r.norm();
        r = next;
        objective = log_joint(problem, &r);
        if !objective.is_finite() {
            return Err(Error::Divergence { iteration: it });
        }
        iterations = it;
        if step <= tol * scale {
            converged = true;
            break;
        }
    }
    Ok(BemState {
        r_hat: r,
        iterations,
        objective,
        converged,
    })
}

/// Expectation-maximization followed by a damped Newton polish.
///
/// The EM iteration converges linearly, which leaves the gradient above the
/// stationarity tolerance of [`laplace_log_evidence`] in flat corners; a few
/// Newton steps (accepted only when they do not decrease `h`) finish the job
/// at quadratic rate.
pub fn find_mode(problem: &LatentPosteriorProblem, max_iter: usize, tol: f64) -> Result<BemState> {
    let mut state = bem_solve(problem, max_iter, tol)?;
    let scale = 1.0 + state.r_hat.norm();
    for _ in 0..12 {
        let grad = grad_log_joint(problem, &state.r_hat);
        if grad.norm() <= 0.01 * MODE_GRAD_TOL * scale {
            break;
        }
        let neg_h = -hessian_log_joint(problem, &state.r_hat);
        let Some(chol) = Cholesky::new(neg_h) else {
            break;
        };
        let direction = chol.solve(&grad);
        let x = real_coords(&state.r_hat);
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let candidate = complex_coords(&(&x + lambda * &direction));
            let value = log_joint(problem, &candidate);
            if value >= state.objective - 1e-12 {
                state.r_hat = candidate;
                state.objective = value;
                improved = true;
                break;
            }
            lambda /= 2.0;
        }
        if !improved {
            break;
        }
    }
    state.converged =
        grad_log_joint(problem, &state.r_hat).norm() <= MODE_GRAD_TOL * (1.0 + state.r_hat.norm());
    Ok(state)
}

/// Multi-start variant: the prior mean plus `extra_starts` prior draws; the
/// objective is non-convex, so extra starts guard against secondary modes.
/// Returns the best run by final objective.
pub fn bem_solve_multistart(
    problem: &LatentPosteriorProblem,
    max_iter: usize,
    tol: f64,
    extra_starts: usize,
    seed: u64,
) -> Result<BemState> {
    let mut best = bem_solve(problem, max_iter, tol)?;
    for k in 0..extra_starts {
        let mut rng = crate::rng::substream(seed, &[0xB3, k as u64]);
        let start = DVector::from_fn(problem.m(), |i, _| {
            crate::rng::sample_cn(&mut rng, problem.r_bar[i], problem.sigma2_r)
        });
        let candidate = bem_solve_from(problem, start, max_iter, tol)?;
        if candidate.objective > best.objective {
            best = candidate;
        }
    }
    Ok(best)
}

/// Gradient-norm tolerance classifying `r_hat` as a stationary point.
const MODE_GRAD_TOL: f64 = 1e-4;

/// Log marginal likelihood by Laplace approximation at the mode `r_hat`:
/// `h(r̂) + ½ log |2π (-H)⁻¹|` over the 2M real coordinates.
///
/// Fails if `r_hat` is not stationary (gradient norm above
/// `1e-4·(1+‖r̂‖)`) or if `-H` is not positive definite (saddle or ridge);
/// callers may fall back to the moment-matching detector in that case.
pub fn laplace_log_evidence(
    problem: &LatentPosteriorProblem,
    r_hat: &DVector<Complex64>,
) -> Result<f64> {
    let grad = grad_log_joint(problem, r_hat);
    let scale = 1.0 + r_hat.norm();
    if grad.norm() > MODE_GRAD_TOL * scale {
        return Err(Error::Domain(format!(
            "r_hat is not a stationary point: |grad| = {:.3e}",
            grad.norm()
        )));
    }
    let h = hessian_log_joint(problem, r_hat);
    let neg = -h;
    let chol = match Cholesky::new(neg) {
        Some(c) => c,
        None => {
            // Analytic and finite-difference curvatures disagree only in
            // ill-conditioned corners; retry once before declaring a saddle.
            let fd = -hessian_log_joint_fd(problem, r_hat);
            Cholesky::new(fd).ok_or_else(|| {
                Error::SaddlePoint("Hessian at the mode is not negative definite".into())
            })?
        }
    };
    let dim = 2 * problem.m();
    let log_det_neg_h = 2.0 * (0..dim).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>();
    Ok(
        log_joint(problem, r_hat) + (dim as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * log_det_neg_h,
    )
}

/// Outcome of a Laplace frame decision.
#[derive(Debug, Clone)]
pub struct LaplaceDecision {
    pub hypothesis: Hypothesis,
    /// Approximate log likelihood ratio; the decision is `log_lrt >= log γ`.
    pub log_lrt: f64,
    /// Saddle-point failures that triggered the moment-matching fallback.
    pub saddle_fallbacks: u32,
    /// True when the reported decision came from the fallback detector.
    pub ga_fallback: bool,
    /// Total expectation-maximization iterations across all solves.
    pub total_iterations: usize,
}

/// Default iteration budget for the per-symbol mode searches.
pub const BEM_MAX_ITER: usize = 50;
/// Default step tolerance for the per-symbol mode searches.
pub const BEM_TOL: f64 = 1e-8;

/// Frame decision: per symbol and hypothesis, find the mode, apply the
/// Laplace estimate, and sum the per-symbol log evidences into the
/// likelihood-ratio test `Σ_l [log p̂(y(l)|H1) - log p̂(y(l)|H0)] ≷ log γ`
/// (ties decide active).
///
/// A saddle under either hypothesis makes the frame fall back to the
/// moment-matching detector, with the event counted on the report.
pub fn laplace_decide(
    y_frame: &DMatrix<Complex64>,
    est: &ChannelEstimates,
    cfg: &SystemConfig,
    gamma: f64,
) -> Result<LaplaceDecision> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Domain("gamma must be positive".into()));
    }
    if y_frame.ncols() != cfg.frame_len {
        return Err(Error::Dimension(
            "frame length does not match the config".into(),
        ));
    }
    let mut log_lrt = 0.0;
    let mut total_iterations = 0;
    let mut saddle_fallbacks = 0u32;
    for l in 0..cfg.frame_len {
        let mut symbol_lrt = 0.0;
        let mut saddled = false;
        for hyp in [Hypothesis::H0, Hypothesis::H1] {
            let problem = LatentPosteriorProblem::for_symbol(y_frame, est, cfg, l, hyp)?;
            let state = find_mode(&problem, BEM_MAX_ITER, BEM_TOL)?;
            total_iterations += state.iterations;
            match laplace_log_evidence(&problem, &state.r_hat) {
                Ok(ev) => {
                    symbol_lrt += match hyp {
                        Hypothesis::H0 => -ev,
                        Hypothesis::H1 => ev,
                    }
                }
                Err(Error::SaddlePoint(_)) | Err(Error::Domain(_)) => {
                    saddled = true;
                    saddle_fallbacks += 1;
                    break;
                }
                Err(other) => return Err(other),
            }
        }
        if saddled {
            // Fall back to the moment-matching detector for the whole frame.
            let ga = build_ga_model(est, cfg)?;
            let (hyp, statistic, _) = ga_decide(&ga, y_frame, gamma)?;
            let centered = statistic - partial_csi::threshold(ga.dual(), 1.0)?;
            return Ok(LaplaceDecision {
                hypothesis: hyp,
                log_lrt: centered,
                saddle_fallbacks,
                ga_fallback: true,
                total_iterations,
            });
        }
        log_lrt += symbol_lrt;
    }
    let hypothesis = if log_lrt >= gamma.ln() {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok(LaplaceDecision {
        hypothesis,
        log_lrt,
        saddle_fallbacks,
        ga_fallback: false,
        total_iterations,
    })
}
