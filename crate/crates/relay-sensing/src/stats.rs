//! Shared special functions and sample diagnostics.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Upper-tail standard normal probability `Q(x) = P(Z >= x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile via Acklam's rational approximation refined with
/// one Halley step; accurate to ~1e-15 over (0,1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(Error::Domain(format!("quantile needs p in (0,1), got {p}")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Halley refinement against the exact CDF.
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

/// Natural log of the gamma function.
pub fn log_gamma(x: f64) -> f64 {
    ln_gamma(x)
}

/// Modified Bessel function of the second kind, order zero.
///
/// Polynomial approximations from Abramowitz & Stegun 9.8; absolute error
/// below 1e-7 on the positive axis.
pub fn bessel_k0(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 2.0 {
        let t = x / 3.75;
        let t2 = t * t;
        let i0 = 1.0
            + t2 * (3.5156229
                + t2 * (3.0899424
                    + t2 * (1.2067492 + t2 * (0.2659732 + t2 * (0.0360768 + t2 * 0.0045813)))));
        let u = x * x / 4.0;
        -(x / 2.0).ln() * i0
            + (-0.57721566
                + u * (0.42278420
                    + u * (0.23069756
                        + u * (0.03488590 + u * (0.00262698 + u * (0.00010750 + u * 0.00000740))))))
    } else {
        let u = 2.0 / x;
        (x.exp() * x.sqrt()).recip()
            * (1.25331414
                + u * (-0.07832358
                    + u * (0.02189568
                        + u * (-0.01062446
                            + u * (0.00587872 + u * (-0.00251540 + u * 0.00053208))))))
    }
}

/// One-sample Kolmogorov distance of `samples` against the standard normal.
///
/// Sorts a copy; NaNs are rejected.
pub fn ks_distance_normal(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples(
            "KS distance needs samples".into(),
        ));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("KS distance: NaN sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        sup = sup
            .max((i as f64 / n - f).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    Ok(sup)
}

/// Two-sample Kolmogorov distance between empirical CDFs.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples(
            "two-sample KS needs both samples".into(),
        ));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            i += 1;
        } else {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_function_values() {
        assert_relative_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(q_function(1.0), 0.15865525393145707, epsilon = 1e-10);
        assert_relative_eq!(q_function(-1.0), 0.8413447460685429, epsilon = 1e-10);
        assert_relative_eq!(q_function(3.0), 1.3498980316300946e-3, epsilon = 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-6] {
            let x = normal_quantile(p).unwrap();
            assert_relative_eq!(normal_cdf(x), p, epsilon = 1e-12, max_relative = 1e-10);
        }
        assert!(normal_quantile(0.0).is_err());
    }

    #[test]
    fn bessel_k0_reference_values() {
        // Abramowitz & Stegun tables.
        assert_relative_eq!(bessel_k0(1.0), 0.4210244382, epsilon = 3e-7);
        assert_relative_eq!(bessel_k0(2.0), 0.1138938727, epsilon = 3e-7);
        assert_relative_eq!(bessel_k0(0.1), 2.4270690247, epsilon = 3e-6);
        assert_relative_eq!(bessel_k0(5.0), 3.6910983e-3, max_relative = 1e-5);
        assert_eq!(bessel_k0(0.0), f64::INFINITY);
    }

    #[test]
    fn ks_normal_null_calibration() {
        // Exact normal input stays below the 5% critical value 1.36/sqrt(n).
        let n = 4000;
        let samples: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let d = ks_distance_normal(&samples).unwrap();
        assert!(d < 1.36 / (n as f64).sqrt(), "d = {d}");
    }

    #[test]
    fn ks_two_sample_detects_shift() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        let d = ks_distance_two_sample(&a, &b).unwrap();
        assert!(d > 0.45);
        let d0 = ks_distance_two_sample(&a, &a).unwrap();
        assert!(d0 < 2e-3);
    }
}
