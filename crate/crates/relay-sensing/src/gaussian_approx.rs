//! Moment-matching Gaussian detector for doubly-uncertain channels, with
//! product-normal distribution tools and a Berry-Esseen accuracy bound.
//!
//! When both channel legs are uncertain the received symbol is a sum of
//! products of Gaussians plus noise; its exact law is intractable (the
//! product-normal family is not closed under convolution). Matching the first
//! two moments gives a Gaussian surrogate per hypothesis that plugs straight
//! into the quadratic-form detector of [`crate::partial_csi`]. The matched
//! moments are exact; only Gaussianity is approximate, and the multivariate
//! Berry-Esseen bound quantifies that error as the relay count grows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::partial_csi::{self, DualGaussianModel};
use crate::signal_model::{ChannelEstimates, Hypothesis, SystemConfig};
use crate::stats::{bessel_k0, ks_distance_normal, log_gamma, normal_quantile};

/// Gaussian surrogate with the exact first two moments of the received symbol.
#[derive(Debug, Clone)]
pub struct MomentMatchedModel {
    mu: Vec<DVector<Complex64>>,
    sigma_h0: Vec<DMatrix<Complex64>>,
    sigma_h1: Vec<DMatrix<Complex64>>,
    b_matrix: Vec<DMatrix<Complex64>>,
    clipped: bool,
    dual: DualGaussianModel,
}

impl MomentMatchedModel {
    /// Matched mean under the active hypothesis at symbol `l`.
    pub fn mu(&self, l: usize) -> &DVector<Complex64> {
        &self.mu[l]
    }

    /// Matched idle covariance at symbol `l`.
    pub fn sigma_h0(&self, l: usize) -> &DMatrix<Complex64> {
        &self.sigma_h0[l]
    }

    /// Matched active covariance at symbol `l`.
    pub fn sigma_h1(&self, l: usize) -> &DMatrix<Complex64> {
        &self.sigma_h1[l]
    }

    /// Relay-output second moment `B(l) = Σ_V + |s|²(Σ_F + F̄ F̄^H)`.
    pub fn b_matrix(&self, l: usize) -> &DMatrix<Complex64> {
        &self.b_matrix[l]
    }

    /// True when the active covariance needed eigenvalue clipping to stay
    /// positive semidefinite.
    pub fn clipped(&self) -> bool {
        self.clipped
    }

    /// The quadratic-form detector built on the matched moments.
    pub fn dual(&self) -> &DualGaussianModel {
        &self.dual
    }
}

fn clip_to_psd(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, bool) {
    let eig = SymmetricEigen::new((m + m.adjoint()) * Complex64::new(0.5, 0.0));
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return (m.clone(), false);
    }
    let n = m.nrows();
    let mut repaired = DMatrix::<Complex64>::zeros(n, n);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let u = eig.eigenvectors.column(i);
            repaired += u * u.adjoint() * Complex64::new(lam, 0.0);
        }
    }
    (repaired, true)
}

/// Builds the moment-matched model from the channel estimates.
///
/// Requires `σ²_G > 0` or `σ²_F > 0`; with both legs exact the exact
/// detectors apply and the Gaussian surrogate is pointless. The matched
/// moments are
///
/// ```text
/// E[y|H1]   = Ḡ F̄ s
/// Cov[y|H0] = σ²_V Ḡ Ḡ^H + (M σ²_V σ²_G + σ²_W) I
/// Cov[y|H1] = σ²_G Tr[B] I + Ḡ B Ḡ^H - μ μ^H + σ²_W I
/// ```
///
/// with `B = σ²_V I + |s|²(σ²_F I + F̄ F̄^H)`. The idle covariance keeps its
/// `σ²_V Ḡ Ḡ^H` term for nonzero estimates; it vanishes in the blind
/// (zero-mean estimate) setting.
pub fn build_ga_model(est: &ChannelEstimates, cfg: &SystemConfig) -> Result<MomentMatchedModel> {
    cfg.validate()?;
    if cfg.sigma2_g == 0.0 && cfg.sigma2_f == 0.0 {
        return Err(Error::Config(
            "both channel legs exact: use the exact detectors instead of moment matching".into(),
        ));
    }
    let (n, m_relays, frame_len) = (cfg.n_antennas, cfg.n_relays, cfg.frame_len);
    let eye = DMatrix::<Complex64>::identity(n, n);
    let eye_m = DMatrix::<Complex64>::identity(m_relays, m_relays);

    let mut mu = Vec::with_capacity(frame_len);
    let mut s0 = Vec::with_capacity(frame_len);
    let mut s1 = Vec::with_capacity(frame_len);
    let mut b_list = Vec::with_capacity(frame_len);
    let mut clipped = false;
    for l in 0..frame_len {
        let g_bar = est.g(l);
        let f_bar = est.f(l);
        if g_bar.nrows() != n || g_bar.ncols() != m_relays || f_bar.len() != m_relays {
            return Err(Error::Dimension(
                "estimates do not match the configured dimensions".into(),
            ));
        }
        let s = cfg.pilot[l];
        let s2 = s.norm_sqr();
        let r_bar = f_bar * s;
        let mu_l = g_bar * &r_bar;
        let b = &eye_m * Complex64::new(cfg.sigma2_v + s2 * cfg.sigma2_f, 0.0)
            + f_bar * f_bar.adjoint() * Complex64::new(s2, 0.0);

        let sigma_h0 = g_bar * g_bar.adjoint() * Complex64::new(cfg.sigma2_v, 0.0)
            + &eye
                * Complex64::new(
                    m_relays as f64 * cfg.sigma2_v * cfg.sigma2_g + cfg.sigma2_w,
                    0.0,
                );
        let raw_h1 = &eye * (b.trace() * Complex64::new(cfg.sigma2_g, 0.0))
            + g_bar * &b * g_bar.adjoint()
            - &mu_l * mu_l.adjoint()
            + &eye * Complex64::new(cfg.sigma2_w, 0.0);
        let (sigma_h1, was_clipped) = clip_to_psd(&raw_h1);
        clipped |= was_clipped;

        mu.push(mu_l);
        s0.push(sigma_h0);
        s1.push(sigma_h1);
        b_list.push(b);
    }

    let dual = DualGaussianModel::from_moments(mu.clone(), s0.clone(), s1.clone())?;
    Ok(MomentMatchedModel {
        mu,
        sigma_h0: s0,
        sigma_h1: s1,
        b_matrix: b_list,
        clipped,
        dual,
    })
}

/// Quadratic-form decision on the matched Gaussians: returns the chosen
/// hypothesis, the statistic, and the threshold. Ties decide active.
pub fn ga_decide(
    model: &MomentMatchedModel,
    y: &DMatrix<Complex64>,
    gamma: f64,
) -> Result<(Hypothesis, f64, f64)> {
    let statistic = partial_csi::test_statistic(&model.dual, y)?;
    let crit = partial_csi::threshold(&model.dual, gamma)?;
    let hyp = if statistic >= crit {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok((hyp, statistic, crit))
}

/// Location/scale parameters of two independent real normals whose product is
/// being studied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductNormalParams {
    /// Mean-to-deviation ratio of the first factor.
    pub rho_x: f64,
    /// Mean-to-deviation ratio of the second factor.
    pub rho_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl ProductNormalParams {
    pub fn new(mean_x: f64, sigma_x: f64, mean_y: f64, sigma_y: f64) -> Result<Self> {
        if sigma_x.is_nan() || sigma_y.is_nan() || sigma_x <= 0.0 || sigma_y <= 0.0 {
            return Err(Error::Domain(
                "product-normal scales must be positive".into(),
            ));
        }
        Ok(ProductNormalParams {
            rho_x: mean_x / sigma_x,
            rho_y: mean_y / sigma_y,
            sigma_x,
            sigma_y,
        })
    }
}

/// Moment generating function of the normalized product `X Y / (σ_X σ_Y)`:
/// `M(t) = exp(((ρ_X² + ρ_Y²) t² + 2 ρ_X ρ_Y t) / (2(1-t²))) / √(1-t²)`,
/// defined for |t| < 1.
pub fn product_normal_mgf(params: &ProductNormalParams, t: f64) -> Result<f64> {
    if t.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "MGF argument must satisfy |t| < 1, got {t}"
        )));
    }
    let (rx, ry) = (params.rho_x, params.rho_y);
    let num = (rx * rx + ry * ry) * t * t + 2.0 * rx * ry * t;
    Ok((num / (2.0 * (1.0 - t * t))).exp() / (1.0 - t * t).sqrt())
}

/// Density of the product of two independent centered normals,
/// `K₀(|z| / (σ_X σ_Y)) / (π σ_X σ_Y)`; log-singular at the origin, where a
/// positive-infinity sentinel is returned.
pub fn product_normal_pdf_central(z: f64, sigma_x: f64, sigma_y: f64) -> f64 {
    if z == 0.0 {
        return f64::INFINITY;
    }
    let scale = sigma_x * sigma_y;
    bessel_k0(z.abs() / scale) / (std::f64::consts::PI * scale)
}

/// Berry-Esseen bound on the Kolmogorov distance over convex sets between the
/// standardized relay sum and a Gaussian:
/// `400 N^{1/4} E‖Ỹ‖³ / √M` with `E‖Ỹ‖³ = 2√2 Γ((N+3)/2) / Γ(N/2)`.
///
/// A diagnostic only: at desk scale it typically exceeds one, and it diverges
/// with the antenna count at fixed relay count.
pub fn berry_esseen_bound(n_antennas: usize, n_relays: usize) -> f64 {
    let n = n_antennas as f64;
    let third_moment = 2.0 * 2f64.sqrt() * (log_gamma((n + 3.0) / 2.0) - log_gamma(n / 2.0)).exp();
    400.0 * n.powf(0.25) * third_moment / (n_relays as f64).sqrt()
}

/// Quantile-pair table and Kolmogorov distance of standardized samples
/// against the standard normal.
#[derive(Debug, Clone)]
pub struct NormalityReport {
    /// (theoretical, empirical) quantile pairs at evenly spaced levels.
    pub quantile_pairs: Vec<(f64, f64)>,
    /// One-sample Kolmogorov distance against the standard normal.
    pub ks_distance: f64,
    /// Number of samples the report was built from.
    pub n_samples: usize,
}

impl NormalityReport {
    /// 5%-level Kolmogorov critical value `1.36 / √n` for this sample size.
    pub fn ks_critical_5pct(&self) -> f64 {
        1.36 / (self.n_samples as f64).sqrt()
    }

    /// Renders the quantile pairs as a delimited table for external plotting.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("theoretical_quantile,empirical_quantile\n");
        for (t, e) in &self.quantile_pairs {
            out.push_str(&format!("{t},{e}\n"));
        }
        out
    }
}

/// Builds a normality report from at least 1000 standardized samples.
///
/// Quantile pairs are evaluated at up to 1000 evenly spaced probability
/// levels; the Kolmogorov distance uses the full sample.
pub fn normality_diagnostics(samples: &[f64]) -> Result<NormalityReport> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientSamples(format!(
            "normality diagnostics need at least 1000 samples, got {}",
            samples.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let levels = n.min(1000);
    let mut pairs = Vec::with_capacity(levels);
    for i in 0..levels {
        let p = (i as f64 + 0.5) / levels as f64;
        let idx = ((p * n as f64) as usize).min(n - 1);
        pairs.push((normal_quantile(p)?, sorted[idx]));
    }
    let ks = ks_distance_normal(samples)?;
    Ok(NormalityReport {
        quantile_pairs: pairs,
        ks_distance: ks,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_cn, sample_cn_matrix, sample_cn_vector, substream};
    use crate::signal_model::sample_frame;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn blind_idle_covariance_is_isotropic() {
        let cfg = SystemConfig::new(2, 2, 1, 1.0, 1.0, 1.0, 1.0).unwrap();
        let est = ChannelEstimates::blind(2, 2);
        let model = build_ga_model(&est, &cfg).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 3.0 } else { 0.0 };
                assert_relative_eq!(model.sigma_h0(0)[(i, j)].re, want, epsilon = 1e-14);
                assert_relative_eq!(model.sigma_h0(0)[(i, j)].im, 0.0, epsilon = 1e-14);
            }
        }
        assert!(!model.clipped());
    }

    #[test]
    fn exact_g_limit_collapses_to_dual_gaussian_moments() {
        let mut cfg = SystemConfig::new(2, 3, 1, 0.5, 1.0, 0.0, 0.8).unwrap();
        cfg.sigma2_g = 0.0;
        let g = sample_cn_matrix(&mut substream(1, &[1]), &DMatrix::zeros(2, 3), 1.0);
        let f = sample_cn_vector(&mut substream(1, &[2]), &DVector::zeros(3), 1.0);
        let est = ChannelEstimates::constant(g.clone(), f.clone());
        let model = build_ga_model(&est, &cfg).unwrap();
        let exact = partial_csi::build_dual_model(&[g], &[f], &cfg).unwrap();
        for l in 0..1 {
            let d0 = (model.sigma_h0(l) - exact.sigma_h0(l)).norm();
            let d1 = (model.sigma_h1(l) - exact.sigma_h1(l)).norm();
            let dm = (model.mu(l) - exact.mu(l)).norm();
            assert!(d0 < 1e-12 && d1 < 1e-12 && dm < 1e-12, "{d0} {d1} {dm}");
        }
    }

    #[test]
    fn fully_exact_config_is_rejected() {
        let cfg = SystemConfig::new(2, 2, 1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let est = ChannelEstimates::blind(2, 2);
        assert!(matches!(build_ga_model(&est, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn matched_moments_agree_with_sampling() {
        // Random nonzero estimates: empirical mean/covariance of exact-model
        // draws vs the matched moments, 4 batch standard errors.
        let cfg = SystemConfig::new(2, 3, 1, 0.4, 0.9, 0.6, 0.7).unwrap();
        let g = sample_cn_matrix(&mut substream(9, &[1]), &DMatrix::zeros(2, 3), 1.0);
        let f = sample_cn_vector(&mut substream(9, &[2]), &DVector::zeros(3), 1.0);
        let est = ChannelEstimates::constant(g, f);
        let model = build_ga_model(&est, &cfg).unwrap();

        let batches = 50usize;
        let per_batch = 20_000usize;
        for (truth, want_mu, want_cov) in [
            (Hypothesis::H0, DVector::zeros(2), model.sigma_h0(0).clone()),
            (
                Hypothesis::H1,
                model.mu(0).clone(),
                model.sigma_h1(0).clone(),
            ),
        ] {
            // Batch means of the covariance entries give empirical errors.
            let mut cov_batches = Vec::with_capacity(batches);
            let mut mean_acc = DVector::<Complex64>::zeros(2);
            for b in 0..batches {
                let mut acc = DMatrix::<Complex64>::zeros(2, 2);
                for i in 0..per_batch {
                    let seed = (b * per_batch + i) as u64;
                    let fr = sample_frame(&cfg, &est, truth, seed).unwrap();
                    let yc = fr.y.column(0).into_owned();
                    let centered = &yc - &want_mu;
                    acc += &centered * centered.adjoint();
                    mean_acc += yc;
                }
                cov_batches.push(acc / Complex64::new(per_batch as f64, 0.0));
            }
            let total = (batches * per_batch) as f64;
            let mean = mean_acc / Complex64::new(total, 0.0);
            for i in 0..2 {
                let se = (want_cov[(i, i)].re / 2.0 / total).sqrt();
                assert!(
                    (mean[i] - want_mu[i]).norm() < 4.0 * se * 2f64.sqrt(),
                    "{truth}: mean[{i}]"
                );
                for j in 0..2 {
                    let avg: Complex64 = cov_batches.iter().map(|c| c[(i, j)]).sum::<Complex64>()
                        / Complex64::new(batches as f64, 0.0);
                    let var_b: f64 = cov_batches
                        .iter()
                        .map(|c| (c[(i, j)] - avg).norm_sqr())
                        .sum::<f64>()
                        / (batches as f64 - 1.0);
                    let se_entry = (var_b / batches as f64).sqrt();
                    assert!(
                        (avg - want_cov[(i, j)]).norm() < 4.0 * se_entry,
                        "{truth}: cov[{i},{j}] {} vs {}",
                        avg,
                        want_cov[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn ga_decide_matches_exact_case_in_the_limit() {
        let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 1.0).unwrap();
        let g = sample_cn_matrix(&mut substream(3, &[1]), &DMatrix::zeros(2, 2), 1.0);
        let f_bar = DVector::from_vec(vec![cx(0.4, 0.1), cx(-0.2, 0.6)]);
        let est = ChannelEstimates::constant(g.clone(), f_bar.clone());
        let ga = build_ga_model(&est, &cfg).unwrap();
        let exact = partial_csi::build_dual_model(&[g], &[f_bar], &cfg).unwrap();
        for seed in 0..200u64 {
            let truth = if seed % 2 == 0 {
                Hypothesis::H0
            } else {
                Hypothesis::H1
            };
            let fr = sample_frame(&cfg, &est, truth, seed).unwrap();
            let (ga_hyp, _, _) = ga_decide(&ga, &fr.y, 1.3).unwrap();
            let exact_hyp = partial_csi::decide(&exact, &fr.y, 1.3).unwrap();
            assert_eq!(ga_hyp, exact_hyp, "seed {seed}");
        }
    }

    #[test]
    fn reflection_preserves_rates_but_not_decisions() {
        // With an exact receiver leg the active law is symmetric about its
        // mean, so replacing y by 2μ - y leaves the detection rate unchanged
        // even though individual decisions flip.
        let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 0.7).unwrap();
        let g = sample_cn_matrix(&mut substream(8, &[1]), &DMatrix::zeros(2, 2), 1.0);
        let f_bar = DVector::from_vec(vec![cx(0.7, -0.3), cx(-0.2, 0.5)]);
        let est = ChannelEstimates::constant(g, f_bar);
        let model = build_ga_model(&est, &cfg).unwrap();
        let mu = model.mu(0).clone();
        let n = 20_000usize;
        let (mut hits, mut hits_reflected, mut flips) = (0u32, 0u32, 0u32);
        for seed in 0..n as u64 {
            let fr = sample_frame(&cfg, &est, Hypothesis::H1, seed).unwrap();
            let mut reflected = DMatrix::zeros(2, 1);
            reflected.set_column(0, &(&mu * cx(2.0, 0.0) - fr.y.column(0)));
            let (d1, _, _) = ga_decide(&model, &fr.y, 1.0).unwrap();
            let (d2, _, _) = ga_decide(&model, &reflected, 1.0).unwrap();
            hits += (d1 == Hypothesis::H1) as u32;
            hits_reflected += (d2 == Hypothesis::H1) as u32;
            flips += (d1 != d2) as u32;
        }
        let (r1, r2) = (hits as f64 / n as f64, hits_reflected as f64 / n as f64);
        let se = (r1 * (1.0 - r1) / n as f64).sqrt();
        assert!(
            (r1 - r2).abs() < 4.0 * se * 2f64.sqrt(),
            "rates {r1} vs {r2}"
        );
        assert!(flips > 0, "reflection never flipped a decision");
    }

    #[test]
    fn mgf_examples() {
        let central = ProductNormalParams::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(product_normal_mgf(&central, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            product_normal_mgf(&central, 0.5).unwrap(),
            1.0 / 0.75f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(product_normal_mgf(&central, 1.0).is_err());

        // Large location ratios: the standardized MGF approaches exp(t²/2).
        let p = ProductNormalParams::new(50.0, 1.0, 50.0, 1.0).unwrap();
        let z_bar = p.rho_x * p.rho_y;
        let z_sd = (1.0 + p.rho_x * p.rho_x + p.rho_y * p.rho_y).sqrt();
        for i in -10..=10 {
            let t = i as f64 * 0.05;
            let standardized =
                (-z_bar * t / z_sd).exp() * product_normal_mgf(&p, t / z_sd).unwrap();
            let gaussian = (t * t / 2.0).exp();
            assert!(
                ((standardized - gaussian) / gaussian).abs() < 1e-3,
                "t={t}: {standardized}"
            );
        }
    }

    #[test]
    fn central_product_pdf_symmetric_and_normalized() {
        assert_eq!(product_normal_pdf_central(0.0, 1.0, 1.0), f64::INFINITY);
        for z in [0.1, 0.5, 2.0, 7.0] {
            assert_relative_eq!(
                product_normal_pdf_central(z, 1.3, 0.7),
                product_normal_pdf_central(-z, 1.3, 0.7)
            );
        }
        // Normalization via the substitution z = e^u, which absorbs the
        // logarithmic singularity at the origin.
        let n = 200_000;
        let (lo, hi) = (-30.0f64, 40f64.ln());
        let h = (hi - lo) / n as f64;
        let f = |u: f64| product_normal_pdf_central(u.exp(), 1.0, 1.0) * u.exp();
        let mut integral = 0.0;
        for i in 0..n {
            integral += 0.5 * (f(lo + i as f64 * h) + f(lo + (i + 1) as f64 * h)) * h;
        }
        integral *= 2.0; // symmetric about 0
        assert!((integral - 1.0).abs() < 1e-4, "integral {integral}");
    }

    #[test]
    fn sampled_products_match_density() {
        let (sx, sy) = (1.1, 0.8);
        let n = 1_000_000usize;
        let mut rng = substream(31, &[7]);
        let width = 0.2;
        let mut counts = vec![0u64; 50]; // bins on [0.1, 10.1) by symmetry fold
        for _ in 0..n {
            let x: f64 = rng.sample::<f64, _>(StandardNormal) * sx;
            let y: f64 = rng.sample::<f64, _>(StandardNormal) * sy;
            let z = (x * y).abs();
            if z >= 0.1 {
                let b = ((z - 0.1) / width) as usize;
                if b < counts.len() {
                    counts[b] += 1;
                }
            }
        }
        let probs: Vec<f64> = (0..counts.len())
            .map(|b| {
                let mid = 0.1 + (b as f64 + 0.5) * width;
                2.0 * product_normal_pdf_central(mid, sx, sy) * width
            })
            .collect();
        let max_p = probs.iter().cloned().fold(0.0f64, f64::max);
        for (b, (&c, &p)) in counts.iter().zip(&probs).enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - p).abs() < 0.02 * max_p + 4.0 * (p / n as f64).sqrt(),
                "bin {b}: freq {freq} vs prob {p}"
            );
        }
    }

    #[test]
    fn berry_esseen_values_and_scaling() {
        // N=1: third moment 2√2/√π.
        let third = 2.0 * 2f64.sqrt() / std::f64::consts::PI.sqrt();
        assert_relative_eq!(third, 1.5957691216057308, epsilon = 1e-12);
        assert_relative_eq!(
            berry_esseen_bound(1, 4),
            400.0 * third / 2.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(berry_esseen_bound(1, 4), 319.15382432114615, epsilon = 1e-6);

        for n in [1usize, 2, 5] {
            for m in [2usize, 9, 100] {
                assert_relative_eq!(
                    berry_esseen_bound(n, 4 * m),
                    berry_esseen_bound(n, m) / 2.0,
                    epsilon = 1e-12
                );
            }
        }
        // Diverges with the antenna count at fixed relays.
        assert!(berry_esseen_bound(64, 4) > berry_esseen_bound(8, 4));
        assert!(berry_esseen_bound(8, 4) > berry_esseen_bound(1, 4));
    }

    #[test]
    fn normality_report_on_exact_normal_input() {
        let n = 5000;
        let samples: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let report = normality_diagnostics(&samples).unwrap();
        assert!(report.ks_distance < report.ks_critical_5pct());
        assert_eq!(report.n_samples, n);
        let text = report.to_delimited();
        assert!(text.starts_with("theoretical_quantile,empirical_quantile\n"));
        assert_eq!(text.lines().count(), 1 + report.quantile_pairs.len());
        assert!(normality_diagnostics(&samples[..100]).is_err());
    }

    #[test]
    fn more_relays_look_more_gaussian() {
        // Standardized received components under blind channels: the KS
        // distance shrinks from M=2 to M=8.
        let ks_for_m = |m: usize| {
            let (s2v, s2w) = crate::signal_model::noise_for_snr_db(0.0, m, 0.5).unwrap();
            let cfg = SystemConfig::new(2, m, 1, s2v, s2w, 1.0, 1.0).unwrap();
            let est = ChannelEstimates::blind(2, m);
            let model = build_ga_model(&est, &cfg).unwrap();
            let sd = (model.sigma_h1(0)[(0, 0)].re / 2.0).sqrt();
            let mut samples = Vec::new();
            for seed in 0..2000u64 {
                let fr = sample_frame(&cfg, &est, Hypothesis::H1, seed).unwrap();
                for i in 0..2 {
                    samples.push(fr.y[(i, 0)].re / sd);
                    samples.push(fr.y[(i, 0)].im / sd);
                }
            }
            normality_diagnostics(&samples).unwrap().ks_distance
        };
        let (k2, k8) = (ks_for_m(2), ks_for_m(8));
        assert!(k2 > k8, "KS(M=2) = {k2} not above KS(M=8) = {k8}");
    }

    #[test]
    fn mgf_matches_empirical_central_products() {
        let p = ProductNormalParams::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let n = 400_000;
        let mut rng = substream(17, &[3]);
        for t in [-0.5, -0.25, 0.25, 0.5] {
            let mut acc = 0.0;
            for _ in 0..n {
                let x = sample_cn(&mut rng, cx(0.0, 0.0), 2.0).re; // N(0,1)
                let y = sample_cn(&mut rng, cx(0.0, 0.0), 2.0).re;
                acc += (t * x * y).exp();
            }
            let emp = acc / n as f64;
            let exact = product_normal_mgf(&p, t).unwrap();
            assert!(
                (emp - exact).abs() / exact < 0.01,
                "t={t}: {emp} vs {exact}"
            );
        }
    }
}
