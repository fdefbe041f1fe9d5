//! Special functions: the standard normal CDF and Hermite polynomials.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 / sqrt(2 pi)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, `0.5 erfc(-x / sqrt 2)`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 - Phi(x)) / phi(x)` for `x >= 3`, by backward evaluation
/// of its continued fraction.
fn mills_ratio(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=200).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}

/// `ln Phi(z)`, accurate deep into the lower tail.
pub fn ln_normal_cdf(z: f64) -> f64 {
    if z > -3.0 {
        normal_cdf(z).ln()
    } else {
        let x = -z;
        -0.5 * x * x - 0.5 * (2.0 * PI).ln() + mills_ratio(x).ln()
    }
}

/// `exp(a) * Phi(z)` without intermediate overflow or underflow.
pub fn exp_normal_cdf(a: f64, z: f64) -> f64 {
    if z > -3.0 && a < 700.0 {
        a.exp() * normal_cdf(z)
    } else {
        (a + ln_normal_cdf(z)).exp()
    }
}

/// Gaussian heat kernel `(2 pi t)^{-1/2} exp(-(y - x)^2 / 2t)`.
#[inline]
pub fn heat_kernel(t: f64, x: f64, y: f64) -> f64 {
    let d = y - x;
    (-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence
/// `H_{n+1} = 2x H_n - 2n H_{n-1}`.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `H_n(x) / sqrt(2^n n!)` for `n = 0..=n_max`, computed without overflow.
pub fn hermite_normalized(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(2.0_f64.sqrt() * x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::quadrature::quad_adaptive;

    #[test]
    fn cdf_at_zero_and_reflection() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.3) + normal_cdf(-1.3) - 1.0).abs() < 1e-14);
        for x in [0.1, 0.77, 2.5, 5.0, 7.5] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cdf_at_one_matches_quadrature_of_density() {
        let q = quad_adaptive(normal_pdf, f64::NEG_INFINITY, 1.0, 1e-14).unwrap();
        assert!((q.value - 0.841_344_746_068_542_9).abs() < 1e-13);
        assert!((normal_cdf(1.0) - q.value).abs() < 1e-13);
    }

    #[test]
    fn cdf_is_monotone_and_in_unit_interval() {
        let mut last = 0.0;
        for i in -80..=80 {
            let p = normal_cdf(i as f64 * 0.1);
            assert!(p > 0.0 && p < 1.0);
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn log_cdf_tail() {
        for z in [-3.5, -5.0, -10.0, -20.0] {
            let direct = normal_cdf(z).ln();
            assert!((ln_normal_cdf(z) - direct).abs() < 1e-10 * direct.abs(), "z={z}");
        }
        assert!(ln_normal_cdf(-40.0).is_finite());
        let v = exp_normal_cdf(900.0, -45.0);
        assert!(v.is_finite() && v > 0.0);
        assert!((exp_normal_cdf(0.3, -1.0) - 0.3_f64.exp() * normal_cdf(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite_poly(0, 7.3), 1.0);
        assert_eq!(hermite_poly(3, 0.0), 0.0);
        // H_2 = 4x^2 - 2, H_3 = 8x^3 - 12x, H_4 = 2x H_3 - 6 H_2 at x = 1
        let (h2, h3) = (4.0 - 2.0, 8.0 - 12.0);
        assert_eq!(2.0 * h3 - 6.0 * h2, -20.0);
        assert_eq!(hermite_poly(4, 1.0), -20.0);
    }

    #[test]
    fn normalized_hermite_matches_raw() {
        let x = 1.7;
        let v = hermite_normalized(12, x);
        let mut fact = 1.0;
        for (n, hn) in v.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let raw = hermite_poly(n, x) / (2f64.powi(n as i32) * fact).sqrt();
            assert!((hn - raw).abs() < 1e-12 * (1.0 + raw.abs()));
        }
    }
}
