//! Quadratic-form likelihood-ratio detector for two zero/nonzero-mean complex
//! Gaussian hypotheses with different covariances.
//!
//! When the transmitter-to-relay channel is known only through `(F̄, σ²_F)`
//! while `g(l)` is exact, the received symbol is `CN(0, Σ_H0(l))` idle and
//! `CN(μ(l), Σ_H1(l))` active with
//! `Σ_H0 = σ²_V gg^H + σ²_W I`, `Σ_H1 = (σ²_V+σ²_F) gg^H + σ²_W I`, and
//! `μ = g F̄ s`. Completing the square in the log likelihood ratio yields the
//! statistic `T = Σ_l ‖c(l) y(l) + a(l)‖²` with
//! `c^H c = Σ_H0⁻¹ - Σ_H1⁻¹` and `a = c⁺ Σ_H1⁻¹ μ`; `T` is a weighted sum of
//! non-central chi-squares, whitened here into a [`QuadraticFormSpec`] for the
//! [`crate::laguerre`] distribution engine.
//!
//! The same machinery runs on any moment pair via
//! [`DualGaussianModel::from_moments`]; the Gaussian-approximation detector
//! reuses it.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::signal_model::{Hypothesis, SystemConfig};

/// Relative eigenvalue cutoff below which a direction of the covariance
/// difference is treated as exactly null.
const PRUNE_REL: f64 = 1e-12;

/// Weighted sum of independent non-central chi-squares
/// `shift + Σ_k α_k χ²_{ν_k}(δ_k)`.
///
/// Components use the real convention: each surviving complex whitened
/// coordinate contributes two ν=1 components whose weights absorb the half
/// variance split. Pruned (null-variance) directions contribute their squared
/// mean to `shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormSpec {
    /// Positive weights α_k.
    pub weights: Vec<f64>,
    /// Non-centrality parameters δ_k ≥ 0.
    pub noncentrality: Vec<f64>,
    /// Degrees of freedom ν_k.
    pub dof: Vec<u32>,
    /// Deterministic offset from pruned directions.
    pub shift: f64,
}

impl QuadraticFormSpec {
    /// Validates positivity and matching component counts.
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.noncentrality.len() || self.weights.len() != self.dof.len() {
            return Err(Error::Dimension(
                "component lists must share a length".into(),
            ));
        }
        if self.weights.iter().any(|&a| !a.is_finite() || a <= 0.0) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        if self
            .noncentrality
            .iter()
            .any(|&d| !d.is_finite() || d < 0.0)
        {
            return Err(Error::Domain(
                "non-centralities must be nonnegative and finite".into(),
            ));
        }
        if self.dof.contains(&0) {
            return Err(Error::Domain("degrees of freedom must be positive".into()));
        }
        Ok(())
    }

    /// Exact mean `shift + Σ α_k (ν_k + δ_k)`.
    pub fn mean(&self) -> f64 {
        self.shift
            + self
                .weights
                .iter()
                .zip(&self.dof)
                .zip(&self.noncentrality)
                .map(|((&a, &v), &d)| a * (v as f64 + d))
                .sum::<f64>()
    }

    /// Exact variance `Σ 2 α_k² (ν_k + 2 δ_k)`.
    pub fn variance(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.dof)
            .zip(&self.noncentrality)
            .map(|((&a, &v), &d)| 2.0 * a * a * (v as f64 + 2.0 * d))
            .sum::<f64>()
    }

    /// One draw of the form by direct simulation of its chi-square components.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut total = self.shift;
        for ((&a, &v), &d) in self.weights.iter().zip(&self.dof).zip(&self.noncentrality) {
            let mut q = 0.0;
            // Non-centrality enters through a single shifted component.
            let off = d.sqrt();
            for i in 0..v {
                let z: f64 = rng.sample(StandardNormal);
                let z = if i == 0 { z + off } else { z };
                q += z * z;
            }
            total += a * q;
        }
        total
    }
}

/// Two-hypothesis Gaussian model reduced to quadratic-form coordinates.
#[derive(Debug, Clone)]
pub struct DualGaussianModel {
    mu: Vec<DVector<Complex64>>,
    sigma_h0: Vec<DMatrix<Complex64>>,
    sigma_h1: Vec<DMatrix<Complex64>>,
    c: Vec<DMatrix<Complex64>>,
    a: Vec<DVector<Complex64>>,
    log_det_ratio: f64,
    quad_const: f64,
    n_antennas: usize,
    frame_len: usize,
}

fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

impl DualGaussianModel {
    /// Builds the detector from explicit per-symbol moments.
    ///
    /// `sigma_h0[l]` and `sigma_h1[l]` must be Hermitian positive definite
    /// with `Σ_H0⁻¹ - Σ_H1⁻¹` positive semidefinite. Directions of the
    /// difference below `1e-12` of its largest eigenvalue are pruned; if every
    /// direction of every symbol is pruned the hypotheses are
    /// indistinguishable and a degenerate error is returned.
    pub fn from_moments(
        mu: Vec<DVector<Complex64>>,
        sigma_h0: Vec<DMatrix<Complex64>>,
        sigma_h1: Vec<DMatrix<Complex64>>,
    ) -> Result<Self> {
        let frame_len = mu.len();
        if frame_len == 0 || sigma_h0.len() != frame_len || sigma_h1.len() != frame_len {
            return Err(Error::Dimension(
                "per-symbol moment lists must share a length".into(),
            ));
        }
        let n = mu[0].len();
        let mut c_list = Vec::with_capacity(frame_len);
        let mut a_list = Vec::with_capacity(frame_len);
        let mut log_det_ratio = 0.0;
        let mut quad_const = 0.0;
        let mut total_rank = 0usize;

        for l in 0..frame_len {
            if mu[l].len() != n
                || sigma_h0[l].nrows() != n
                || sigma_h0[l].ncols() != n
                || sigma_h1[l].nrows() != n
                || sigma_h1[l].ncols() != n
            {
                return Err(Error::Dimension(format!(
                    "inconsistent dimensions at symbol {l}"
                )));
            }
            let chol0 = Cholesky::new(sigma_h0[l].clone())
                .ok_or_else(|| Error::Domain("Sigma_H0 not positive definite".into()))?;
            let chol1 = Cholesky::new(sigma_h1[l].clone())
                .ok_or_else(|| Error::Domain("Sigma_H1 not positive definite".into()))?;
            let inv0 = chol0.inverse();
            let inv1 = chol1.inverse();
            let diff = hermitize(&(&inv0 - &inv1));

            let eig = SymmetricEigen::new(diff);
            let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
            let cutoff = PRUNE_REL * lambda_max.max(0.0);

            let mut c = DMatrix::<Complex64>::zeros(n, n);
            let mut c_pinv = DMatrix::<Complex64>::zeros(n, n);
            let mut rank = 0usize;
            for (i, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= cutoff {
                    continue;
                }
                rank += 1;
                let u = eig.eigenvectors.column(i);
                let proj = u * u.adjoint();
                c += &proj * Complex64::new(lam.sqrt(), 0.0);
                c_pinv += proj * Complex64::new(lam.sqrt().recip(), 0.0);
            }
            total_rank += rank;

            let a = &c_pinv * (&inv1 * &mu[l]);
            log_det_ratio += chol1.determinant().ln() - chol0.determinant().ln();
            quad_const += a.dotc(&a).re + mu[l].dotc(&(&inv1 * &mu[l])).re;
            c_list.push(c);
            a_list.push(a);
        }

        if total_rank == 0 {
            return Err(Error::Degenerate(
                "Sigma_H0 equals Sigma_H1: the hypotheses are indistinguishable; \
                 use the perfect-CSI detector"
                    .into(),
            ));
        }

        Ok(DualGaussianModel {
            mu,
            sigma_h0,
            sigma_h1,
            c: c_list,
            a: a_list,
            log_det_ratio,
            quad_const,
            n_antennas: n,
            frame_len,
        })
    }

    /// Mean under the active hypothesis at symbol `l`.
    pub fn mu(&self, l: usize) -> &DVector<Complex64> {
        &self.mu[l]
    }

    /// Idle-hypothesis covariance at symbol `l`.
    pub fn sigma_h0(&self, l: usize) -> &DMatrix<Complex64> {
        &self.sigma_h0[l]
    }

    /// Active-hypothesis covariance at symbol `l`.
    pub fn sigma_h1(&self, l: usize) -> &DMatrix<Complex64> {
        &self.sigma_h1[l]
    }

    /// Hermitian square root of `Σ_H0⁻¹ - Σ_H1⁻¹` at symbol `l`.
    pub fn c(&self, l: usize) -> &DMatrix<Complex64> {
        &self.c[l]
    }

    /// Offset vector `a(l) = c(l)⁺ Σ_H1⁻¹(l) μ(l)`.
    pub fn a(&self, l: usize) -> &DVector<Complex64> {
        &self.a[l]
    }

    /// `Σ_l log |Σ_H1(l)| / |Σ_H0(l)|`.
    pub fn log_det_ratio(&self) -> f64 {
        self.log_det_ratio
    }

    /// `Σ_l (a^H a + μ^H Σ_H1⁻¹ μ)`.
    pub fn quad_const(&self) -> f64 {
        self.quad_const
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

/// Builds the Case II model from the exactly-known `g(l)` and the estimate
/// `(F̄(l), σ²_F)`.
///
/// Requires `σ²_F > 0`; with a perfect transmitter-channel estimate the two
/// covariances coincide and the quadratic detector degenerates.
pub fn build_dual_model(
    g: &[DMatrix<Complex64>],
    f_bar: &[DVector<Complex64>],
    cfg: &SystemConfig,
) -> Result<DualGaussianModel> {
    if cfg.sigma2_f <= 0.0 || cfg.sigma2_f.is_nan() {
        return Err(Error::Degenerate(
            "sigma2_f = 0 leaves no covariance difference; use the perfect-CSI detector".into(),
        ));
    }
    let (n, m, frame_len) = (cfg.n_antennas, cfg.n_relays, cfg.frame_len);
    if g.is_empty() || f_bar.is_empty() {
        return Err(Error::Dimension("need at least one channel entry".into()));
    }
    for list_len in [g.len(), f_bar.len()] {
        if list_len != 1 && list_len != frame_len {
            return Err(Error::Dimension(format!(
                "channel list covers {list_len} symbols, frame has {frame_len}"
            )));
        }
    }
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut mu = Vec::with_capacity(frame_len);
    let mut s0 = Vec::with_capacity(frame_len);
    let mut s1 = Vec::with_capacity(frame_len);
    for l in 0..frame_len {
        let gl = &g[l.min(g.len() - 1)];
        let fl = &f_bar[l.min(f_bar.len() - 1)];
        if gl.nrows() != n || gl.ncols() != m || fl.len() != m {
            return Err(Error::Dimension(format!(
                "channel dimensions {}x{} / {} do not match N={n}, M={m}",
                gl.nrows(),
                gl.ncols(),
                fl.len()
            )));
        }
        let outer = gl * gl.adjoint();
        let noise = &eye * Complex64::new(cfg.sigma2_w, 0.0);
        mu.push(gl * fl * cfg.pilot[l]);
        s0.push(&outer * Complex64::new(cfg.sigma2_v, 0.0) + &noise);
        s1.push(&outer * Complex64::new(cfg.sigma2_v + cfg.sigma2_f, 0.0) + &noise);
    }
    DualGaussianModel::from_moments(mu, s0, s1)
}

/// Test statistic `T(y) = Σ_l ‖c(l) y(l) + a(l)‖²`; nonnegative.
pub fn test_statistic(model: &DualGaussianModel, y: &DMatrix<Complex64>) -> Result<f64> {
    model.check_frame(y)?;
    let mut t = 0.0;
    for l in 0..model.frame_len {
        let z = model.c(l) * y.column(l).into_owned() + model.a(l);
        t += z.dotc(&z).re;
    }
    Ok(t)
}

/// Critical value
/// `Γ = log γ + Σ log|Σ_H1/Σ_H0| + Σ (a^H a + μ^H Σ_H1⁻¹ μ)`.
pub fn threshold(model: &DualGaussianModel, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Domain("gamma must be positive".into()));
    }
    Ok(gamma.ln() + model.log_det_ratio + model.quad_const)
}

/// Bayes decision; ties go to the active hypothesis.
pub fn decide(model: &DualGaussianModel, y: &DMatrix<Complex64>, gamma: f64) -> Result<Hypothesis> {
    let t = test_statistic(model, y)?;
    let crit = threshold(model, gamma)?;
    Ok(if t >= crit {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    })
}

/// Whitens the statistic under `hypothesis` into an exact weighted
/// non-central chi-square representation.
///
/// Per symbol, the eigenvalues λ of `c Σ c^H` (with Σ of the requested
/// hypothesis, mean `a` idle / `c μ + a` active) each yield two real
/// components of weight λ/2 and one degree of freedom, with non-centralities
/// `2 Re(m̃)²` and `2 Im(m̃)²` where `m̃` is the unit-variance whitened mean.
pub fn whiten_to_quadratic_form(
    model: &DualGaussianModel,
    hypothesis: Hypothesis,
) -> QuadraticFormSpec {
    let mut weights = Vec::new();
    let mut noncentrality = Vec::new();
    let mut dof = Vec::new();
    let mut shift = 0.0;
    for l in 0..model.frame_len {
        let c = model.c(l);
        let (sigma, mean) = match hypothesis {
            Hypothesis::H0 => (model.sigma_h0(l), model.a(l).clone()),
            Hypothesis::H1 => (model.sigma_h1(l), c * model.mu(l) + model.a(l)),
        };
        let tilde = hermitize(&(c * sigma * c.adjoint()));
        let eig = SymmetricEigen::new(tilde);
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let cutoff = PRUNE_REL * lambda_max.max(0.0);
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            let m = eig.eigenvectors.column(i).dotc(&mean);
            if lam <= cutoff {
                shift += m.norm_sqr();
                continue;
            }
            let scaled = m / Complex64::new(lam.sqrt(), 0.0);
            weights.push(lam / 2.0);
            weights.push(lam / 2.0);
            dof.push(1);
            dof.push(1);
            noncentrality.push(2.0 * scaled.re * scaled.re);
            noncentrality.push(2.0 * scaled.im * scaled.im);
        }
    }
    QuadraticFormSpec {
        weights,
        noncentrality,
        dof,
        shift,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_cn_matrix, sample_cn_vector, substream};
    use crate::signal_model::{sample_frame, ChannelEstimates};
    use crate::stats::ks_distance_two_sample;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_model() -> (DualGaussianModel, SystemConfig) {
        let cfg = SystemConfig::new(1, 1, 1, 1.0, 1.0, 0.0, 1.0).unwrap();
        let g = vec![DMatrix::from_element(1, 1, cx(1.0, 0.0))];
        let f = vec![DVector::from_element(1, cx(1.0, 0.0))];
        (build_dual_model(&g, &f, &cfg).unwrap(), cfg)
    }

    #[test]
    fn scalar_hand_evaluation() {
        let (model, _) = scalar_model();
        assert_relative_eq!(model.sigma_h0(0)[(0, 0)].re, 2.0);
        assert_relative_eq!(model.sigma_h1(0)[(0, 0)].re, 3.0);
        let chc = (model.c(0).adjoint() * model.c(0))[(0, 0)].re;
        assert_relative_eq!(chc, 1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(model.c(0)[(0, 0)].re, 1.0 / 6f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(model.a(0)[0].re, 6f64.sqrt() / 3.0, epsilon = 1e-14);

        // y = 0: statistic is |a|^2 = 2/3.
        let t0 = test_statistic(&model, &DMatrix::zeros(1, 1)).unwrap();
        assert_relative_eq!(t0, 2.0 / 3.0, epsilon = 1e-14);

        // gamma = 1: threshold log(3/2) + 2/3 + 1/3.
        assert_relative_eq!(
            threshold(&model, 1.0).unwrap(),
            1.5f64.ln() + 1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(threshold(&model, 1.0).unwrap(), 1.405465, epsilon = 1e-6);
    }

    #[test]
    fn zero_channel_and_zero_sigma_f_are_degenerate() {
        let cfg = SystemConfig::new(2, 2, 1, 1.0, 1.0, 0.0, 1.0).unwrap();
        let g0 = vec![DMatrix::<Complex64>::zeros(2, 2)];
        let f = vec![DVector::from_element(2, cx(1.0, 0.0))];
        assert!(matches!(
            build_dual_model(&g0, &f, &cfg),
            Err(Error::Degenerate(_))
        ));

        let mut cfg_pf = cfg.clone();
        cfg_pf.sigma2_f = 0.0;
        let g = vec![DMatrix::from_element(2, 2, cx(1.0, 0.0))];
        assert!(matches!(
            build_dual_model(&g, &f, &cfg_pf),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn c_reconstructs_inverse_difference() {
        for seed in 0..10u64 {
            let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 1.0).unwrap();
            let g = sample_cn_matrix(&mut substream(seed, &[1]), &DMatrix::zeros(2, 2), 1.0);
            let f = sample_cn_vector(&mut substream(seed, &[2]), &DVector::zeros(2), 1.0);
            let model = build_dual_model(&[g], &[f], &cfg).unwrap();
            let inv0 = Cholesky::new(model.sigma_h0(0).clone()).unwrap().inverse();
            let inv1 = Cholesky::new(model.sigma_h1(0).clone()).unwrap().inverse();
            let diff = inv0 - inv1;
            let recon = model.c(0).adjoint() * model.c(0);
            let rel = (&recon - &diff).norm() / diff.norm();
            assert!(rel < 1e-10, "seed {seed}: relative error {rel}");
        }
    }

    #[test]
    fn least_norm_preimage_annihilates_offset() {
        let (model, _) = scalar_model();
        // y = -c^+ a; a lies in range(c), so the statistic vanishes.
        let c = model.c(0)[(0, 0)];
        let y = DMatrix::from_element(1, 1, -model.a(0)[0] / c);
        let t = test_statistic(&model, &y).unwrap();
        assert!(t.abs() < 1e-24, "residual {t}");
    }

    #[test]
    fn completing_the_square_identity() {
        // 2 log Λ from the half-exponent densities equals
        // -log_det_ratio + T - quad_const.
        for seed in 0..20u64 {
            let cfg = SystemConfig::new(3, 2, 2, 0.5, 1.0, 0.0, 0.8).unwrap();
            let g = sample_cn_matrix(&mut substream(seed, &[5]), &DMatrix::zeros(3, 2), 1.0);
            let f = sample_cn_vector(&mut substream(seed, &[6]), &DVector::zeros(2), 1.0);
            let model = build_dual_model(&[g], &[f], &cfg).unwrap();
            let y = sample_cn_matrix(&mut substream(seed, &[7]), &DMatrix::zeros(3, 2), 2.0);

            let mut two_log_lambda = 0.0;
            for l in 0..2 {
                let chol0 = Cholesky::new(model.sigma_h0(l).clone()).unwrap();
                let chol1 = Cholesky::new(model.sigma_h1(l).clone()).unwrap();
                let yl = y.column(l).into_owned();
                let centered = &yl - model.mu(l);
                let q0 = yl.dotc(&chol0.solve(&yl)).re;
                let q1 = centered.dotc(&chol1.solve(&centered)).re;
                two_log_lambda += chol0.determinant().ln() - chol1.determinant().ln() + q0 - q1;
            }
            let t = test_statistic(&model, &y).unwrap();
            let identity = -model.log_det_ratio() + t - model.quad_const();
            assert_relative_eq!(
                two_log_lambda,
                identity,
                epsilon = 1e-8,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn threshold_positive_for_zero_mean() {
        let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 1.0).unwrap();
        let g = sample_cn_matrix(&mut substream(4, &[1]), &DMatrix::zeros(2, 2), 1.0);
        let model = build_dual_model(&[g], &[DVector::zeros(2)], &cfg).unwrap();
        // mu = 0 forces a = 0, so the gamma=1 threshold is the log-det ratio.
        assert!(model.quad_const().abs() < 1e-20);
        let crit = threshold(&model, 1.0).unwrap();
        assert_relative_eq!(crit, model.log_det_ratio(), epsilon = 1e-14);
        assert!(crit > 0.0);
    }

    #[test]
    fn whiten_isotropic_case() {
        // Scalar instance tuned so c Σ_H0 c^H = 1/2: g=1, σ²_V=σ²_W=1, σ²_F=2.
        let mut cfg = SystemConfig::new(1, 1, 1, 1.0, 1.0, 0.0, 2.0).unwrap();
        cfg.sigma2_f = 2.0;
        let g = vec![DMatrix::from_element(1, 1, cx(1.0, 0.0))];
        let model = build_dual_model(&g, &[DVector::zeros(1)], &cfg).unwrap();
        let spec = whiten_to_quadratic_form(&model, Hypothesis::H0);
        spec.validate().unwrap();
        assert_eq!(spec.weights.len(), 2); // 2NL real components
        for (&w, (&d, &v)) in spec
            .weights
            .iter()
            .zip(spec.noncentrality.iter().zip(&spec.dof))
        {
            assert_relative_eq!(w, 0.25, epsilon = 1e-12); // half of λ = 1/2
            assert_relative_eq!(d, 0.0);
            assert_eq!(v, 1);
        }
        // E[T] = Σ α ν = 1/2 matches c² E|y|² = (1/4)·2.
        assert_relative_eq!(spec.mean(), 0.5, epsilon = 1e-12);
        assert_eq!(spec.shift, 0.0);
    }

    #[test]
    fn whiten_scalar_h0_spec() {
        let (model, _) = scalar_model();
        let spec = whiten_to_quadratic_form(&model, Hypothesis::H0);
        // λ = c² Σ_H0 = (1/6)·2 = 1/3; α = λ/2 = 1/6 per real part.
        for &w in &spec.weights {
            assert_relative_eq!(w, 1.0 / 6.0, epsilon = 1e-12);
        }
        // Mean offset a = sqrt(6)/3 is real: δ = 2 (Re a/√λ)² = 4 on the real
        // component, 0 on the imaginary one.
        let mut deltas = spec.noncentrality.clone();
        deltas.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_relative_eq!(deltas[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(deltas[1], 4.0, epsilon = 1e-12);
        // E[T] = |a|² + λ = 2/3 + 1/3 = 1.
        assert_relative_eq!(spec.mean(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn full_rank_whitening_yields_two_real_components_per_dimension() {
        let cfg = SystemConfig::new(2, 3, 2, 0.5, 1.0, 0.0, 0.8).unwrap();
        let g = sample_cn_matrix(&mut substream(41, &[1]), &DMatrix::zeros(2, 3), 1.0);
        let f = sample_cn_vector(&mut substream(41, &[2]), &DVector::zeros(3), 1.0);
        let model = build_dual_model(&[g], &[f], &cfg).unwrap();
        for hyp in [Hypothesis::H0, Hypothesis::H1] {
            let spec = whiten_to_quadratic_form(&model, hyp);
            // M >= N keeps the covariance difference full rank: 2·N·L parts.
            assert_eq!(spec.weights.len(), 2 * 2 * 2);
            assert!(spec.dof.iter().all(|&v| v == 1));
        }
    }

    #[test]
    fn whitened_form_matches_statistic_distribution() {
        // Two-sample KS between the statistic on sampled frames and direct
        // draws from the whitened form, both hypotheses.
        let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 1.0).unwrap();
        let g = sample_cn_matrix(&mut substream(77, &[1]), &DMatrix::zeros(2, 2), 1.0);
        let f_bar = DVector::from_vec(vec![cx(0.6, -0.2), cx(-0.3, 0.4)]);
        let model =
            build_dual_model(std::slice::from_ref(&g), std::slice::from_ref(&f_bar), &cfg).unwrap();
        let est = ChannelEstimates::constant(g, f_bar);
        let n = 30_000usize;
        for hyp in [Hypothesis::H0, Hypothesis::H1] {
            let spec = whiten_to_quadratic_form(&model, hyp);
            let mut direct = Vec::with_capacity(n);
            let mut from_frames = Vec::with_capacity(n);
            let mut rng = substream(5150, &[hyp as u64]);
            for seed in 0..n {
                direct.push(spec.sample(&mut rng));
                let fr = sample_frame(&cfg, &est, hyp, seed as u64).unwrap();
                from_frames.push(test_statistic(&model, &fr.y).unwrap());
            }
            let d = ks_distance_two_sample(&direct, &from_frames).unwrap();
            assert!(d < 0.015, "{hyp}: KS distance {d}");
            // Whitened mean matches the empirical mean within 4 se.
            let emp_mean = from_frames.iter().sum::<f64>() / n as f64;
            let se = (spec.variance() / n as f64).sqrt();
            assert!(
                (emp_mean - spec.mean()).abs() < 4.0 * se,
                "{hyp}: mean {emp_mean} vs {}",
                spec.mean()
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn statistic_nonnegative_and_gamma_monotone(seed in 0u64..500, lg in -3.0f64..3.0) {
            let cfg = SystemConfig::new(2, 2, 1, 0.5, 1.0, 0.0, 1.0).unwrap();
            let g = sample_cn_matrix(&mut substream(seed, &[11]), &DMatrix::zeros(2, 2), 1.0);
            let f = sample_cn_vector(&mut substream(seed, &[12]), &DVector::zeros(2), 1.0);
            let model = build_dual_model(&[g], &[f], &cfg).unwrap();
            let y = sample_cn_matrix(&mut substream(seed, &[13]), &DMatrix::zeros(2, 1), 2.0);
            let t = test_statistic(&model, &y).unwrap();
            prop_assert!(t >= 0.0);
            // Raising gamma can only flip decisions from active to idle.
            let lo = decide(&model, &y, lg.exp()).unwrap();
            let hi = decide(&model, &y, (lg + 0.5).exp()).unwrap();
            prop_assert!(!(lo == Hypothesis::H0 && hi == Hypothesis::H1));
        }
    }
}
