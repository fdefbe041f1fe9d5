//! Closed-form transition densities of the catalog processes and their
//! transforms.

use std::f64::consts::PI;

use crate::math::special::{exp_normal_cdf, heat_kernel, normal_cdf};

/// `Φ(a) - Φ(b)`, taken from whichever tail keeps the digits.
pub(crate) fn phi_diff(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        normal_cdf(-b) - normal_cdf(-a)
    } else {
        normal_cdf(a) - normal_cdf(b)
    }
}

pub(crate) fn e1_ytilde(t: f64, x: f64, y: f64) -> f64 {
    let s = t.sqrt();
    let band = phi_diff((y - x + t) / s, (y - x - t) / s);
    (-t).exp() * heat_kernel(t, x, y) + (-0.5 * t).exp() / (2.0 * x.cosh() * y.cosh()) * band
}

pub(crate) fn e2_y(t: f64, x: f64, y: f64) -> f64 {
    heat_kernel(t, x, y) - heat_kernel(t, x, -y)
}

pub(crate) fn e2_ytilde(t: f64, x: f64, y: f64) -> f64 {
    let s = t.sqrt();
    let bracket = phi_diff((y + x + t) / s, (y + x - t) / s) - phi_diff((y - x + t) / s, (y - x - t) / s);
    (-t).exp() * (heat_kernel(t, x, y) + heat_kernel(t, x, -y))
        + (-0.5 * t).exp() / (2.0 * x.sinh() * y.sinh()) * bracket
}

/// Parameters of the elastic example: `β = (1-γ)/(1+γ)` and the seed
/// `h = e^y + β e^{-y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elastic {
    pub gamma: f64,
    pub beta: f64,
}

impl Elastic {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            beta: (1.0 - gamma) / (1.0 + gamma),
        }
    }

    pub fn h(&self, y: f64) -> f64 {
        y.exp() + self.beta * (-y).exp()
    }

    pub fn dh(&self, y: f64) -> f64 {
        y.exp() - self.beta * (-y).exp()
    }

    /// Shift `α = -½ ln|β|` that turns `h` into a multiple of cosh or sinh of `y + α`.
    pub fn alpha(&self) -> Option<f64> {
        (self.beta != 0.0).then(|| -0.5 * self.beta.abs().ln())
    }

    /// `sinh(y) / h(y)` without overflow.
    fn sinh_ratio(&self, y: f64) -> f64 {
        let e = (-2.0 * y).exp();
        (1.0 - e) / (2.0 * (1.0 + self.beta * e))
    }

    pub fn y_density(&self, t: f64, x: f64, y: f64) -> f64 {
        let g = self.gamma;
        let s = t.sqrt();
        heat_kernel(t, x, y) + heat_kernel(t, x, -y)
            - 2.0 * g * exp_normal_cdf(g * (x + y) + 0.5 * g * g * t, -(x + y + g * t) / s)
    }

    pub fn ytilde_density(&self, t: f64, x: f64, y: f64) -> f64 {
        let (g, b) = (self.gamma, self.beta);
        let s = t.sqrt();
        let absorbed = (-t).exp() * (heat_kernel(t, x, y) - heat_kernel(t, x, -y));
        if b == 0.0 {
            return absorbed;
        }
        let cross = 8.0
            * g
            * b
            * self.sinh_ratio(x)
            * self.sinh_ratio(y)
            * exp_normal_cdf(g * (x + y) + (0.5 * g * g - 1.0) * t, -(x + y + g * t) / s);
        let bracket = phi_diff((y - x + t) / s, (y - x - t) / s) - phi_diff((y + x + t) / s, (y + x - t) / s);
        absorbed - cross + 2.0 * b * (-0.5 * t).exp() / (self.h(x) * self.h(y)) * bracket
    }
}

/// Below this time the sine series of the killed kernel on (0, 1) is replaced
/// by the method of images.
const E4_IMAGES_BELOW: f64 = 0.05;

pub(crate) fn e4_y(t: f64, x: f64, y: f64) -> f64 {
    if t < E4_IMAGES_BELOW {
        return (-4..=4)
            .map(|k| {
                let shift = 2.0 * k as f64;
                heat_kernel(t, x, y + shift) - heat_kernel(t, x, -y + shift)
            })
            .sum();
    }
    let mut sum = 0.0;
    for n in 1.. {
        let nf = n as f64;
        let decay = (-0.5 * PI * PI * nf * nf * t).exp();
        if decay < 1e-18 {
            break;
        }
        sum += decay * (nf * PI * x).sin() * (nf * PI * y).sin();
    }
    2.0 * sum
}

/// `(1/π) 𝒟_h sin(nπx) = n cos(nπx) - sin(nπx) cot(πx)` for `h = sin(πx)`.
pub fn e4_f(n: usize, x: f64) -> f64 {
    let nf = n as f64;
    nf * (nf * PI * x).cos() - (nf * PI * x).sin() / (PI * x).tan()
}

/// Eigenfunctions after the second transform on (0, 1).
pub fn e4_f2(n: usize, x: f64) -> f64 {
    let nf = n as f64;
    let (s, c) = (nf * PI * x).sin_cos();
    let sx = (PI * x).sin();
    -(2.0 + nf * nf) * s + 3.0 * s / (sx * sx) - 3.0 * nf * c / (PI * x).tan()
}

/// Sums a series whose `n`-th term is bounded by `bound(n)`; stops once that
/// bound falls below `tol / 10` with at least ten terms taken. Returns the sum
/// and the last bound.
pub(crate) fn sum_series(
    first: usize,
    tol: f64,
    max_terms: usize,
    term: impl Fn(usize) -> f64,
    bound: impl Fn(usize) -> f64,
) -> (f64, f64, bool) {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut last = f64::INFINITY;
    for (k, n) in (first..first + max_terms).enumerate() {
        let v = term(n) - comp;
        let s = sum + v;
        comp = (s - sum) - v;
        sum = s;
        last = bound(n + 1);
        if k + 1 >= 10 && last < 0.1 * tol {
            return (sum, last, true);
        }
    }
    (sum, last, false)
}

pub(crate) fn e4_level1(t: f64, x: f64, y: f64, tol: f64) -> (f64, f64, bool) {
    let rate = |n: usize| -0.5 * PI * PI * ((n * n) as f64 - 2.0) * t;
    let (s, b, ok) = sum_series(
        2,
        tol,
        100_000,
        |n| rate(n).exp() / ((n * n) as f64 - 1.0) * e4_f(n, x) * e4_f(n, y),
        |n| {
            let nf = n as f64;
            8.0 * nf * nf / (nf * nf - 1.0) * rate(n).exp()
        },
    );
    (2.0 * s, 2.0 * b, ok)
}

pub(crate) fn e4_level2(t: f64, x: f64, y: f64, tol: f64) -> (f64, f64, bool) {
    let rate = |n: usize| -0.5 * PI * PI * ((n * n) as f64 - 6.0) * t;
    let (s, b, ok) = sum_series(
        3,
        tol,
        100_000,
        |n| {
            let nf = n as f64;
            rate(n).exp() / ((nf * nf - 1.0) * (nf * nf - 4.0)) * e4_f2(n, x) * e4_f2(n, y)
        },
        |n| {
            let nf = n as f64;
            4.0 * nf.powi(6) / ((nf * nf - 1.0) * (nf * nf - 4.0)) * rate(n).exp()
        },
    );
    (2.0 * s, 2.0 * b, ok)
}

pub(crate) fn e4_ytilde(t: f64, x: f64, y: f64) -> f64 {
    e4_level1(t, x, y, 1e-17).0
}

/// Mehler kernel of Brownian motion killed at rate `y²/2`.
pub(crate) fn e5_y(t: f64, x: f64, y: f64) -> f64 {
    let sh = t.sinh();
    (-0.5 / t.tanh() * (x * x + y * y) + x * y / sh).exp() / (2.0 * PI * sh).sqrt()
}

pub(crate) fn e5_ytilde(t: f64, x: f64, y: f64) -> f64 {
    let rational = 4.0 * t.sinh() * (t.exp() - 2.0 * x * y) / ((2.0 * x * x + 1.0) * (2.0 * y * y + 1.0));
    e5_y(t, x, y) * (-4.0 * t).exp() * (1.0 + rational)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_diff_keeps_upper_tail_digits() {
        let d = phi_diff(9.0, 8.5);
        let exact = normal_cdf(-8.5) - normal_cdf(-9.0);
        assert!((d - exact).abs() <= 1e-30);
        assert!(d > 0.0);
    }

    #[test]
    fn images_and_series_agree_at_the_switch() {
        for (x, y) in [(0.3, 0.4), (0.1, 0.9)] {
            let t = E4_IMAGES_BELOW;
            let img: f64 = (-4..=4)
                .map(|k| {
                    let s = 2.0 * k as f64;
                    heat_kernel(t, x, y + s) - heat_kernel(t, x, -y + s)
                })
                .sum();
            assert!((img - e4_y(t * (1.0 + 1e-12), x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenfunction_bounds_hold() {
        for n in 2..30 {
            for i in 1..400 {
                let x = i as f64 / 400.0;
                assert!(e4_f(n, x).abs() <= 2.0 * n as f64 + 1e-12);
                if n >= 3 {
                    assert!(e4_f2(n, x).abs() <= 2.0 * (n as f64).powi(3));
                }
            }
        }
    }

    #[test]
    fn f2_is_minus_two_sine_squared() {
        for x in [0.1, 0.33, 0.5, 0.8] {
            assert!((e4_f(2, x) + 2.0 * (PI * x).sin().powi(2)).abs() < 1e-14);
        }
    }
}
