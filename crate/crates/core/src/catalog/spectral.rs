//! Eigenfunction expansions of the transformed kernels.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::special::hermite_normalized;
use crate::math::Quadrature;

use super::kernels::{e4_f, sum_series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    DiscreteSeries,
    ContinuousIntegral,
    Mixed,
}

/// An isolated eigenvalue with eigenfunction `φ` and weight `1/‖φ‖²`.
#[derive(Debug, Clone, Copy)]
pub struct BoundState {
    pub eigenvalue: f64,
    pub eigenfunction: fn(f64) -> f64,
    pub weight: f64,
}

/// `p_t(x, y) = Σ_bound e^{λt} w φ(x)φ(y) + Σ_n or ∫ e^{λ(k)t} w(k) φ_k(x) φ_k(y)`.
///
/// For series `k` is the integer index starting at `first_index`. For a
/// continuous band `k` ranges over `band` and `λ(k) = λ(0) - k²/2`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralForm {
    pub kind: SpectralKind,
    pub bound_states: &'static [BoundState],
    pub eigenvalue: fn(f64) -> f64,
    pub eigenfunction: fn(f64, f64) -> f64,
    pub weight: fn(f64) -> f64,
    pub first_index: usize,
    pub band: (f64, f64),
    /// Bound on `|w(k) φ_k(x) φ_k(y)|`.
    pub term_bound: fn(f64, f64, f64) -> f64,
    /// Fixed number of series terms, if any; otherwise truncation is adaptive.
    pub max_terms: Option<usize>,
    /// Below this `t` the expansion is documented as slow.
    pub small_t_floor: f64,
}

impl SpectralForm {
    pub fn eval(&self, t: f64, x: f64, y: f64, tol: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidSpec(format!("spectral expansion needs t > 0, got {t}")));
        }
        let mut sum: f64 = self
            .bound_states
            .iter()
            .map(|b| (b.eigenvalue * t).exp() * b.weight * (b.eigenfunction)(x) * (b.eigenfunction)(y))
            .sum();
        match self.kind {
            SpectralKind::DiscreteSeries => sum += self.series(t, x, y, tol)?,
            SpectralKind::ContinuousIntegral | SpectralKind::Mixed => sum += self.band_integral(t, x, y, tol)?,
        }
        Ok(sum)
    }

    fn slow(&self, t: f64, bound: f64) -> Error {
        Error::SlowConvergence {
            t,
            floor: self.small_t_floor,
            bound,
        }
    }

    fn series(&self, t: f64, x: f64, y: f64, tol: f64) -> Result<f64> {
        let term = |n: usize| {
            let k = n as f64;
            ((self.eigenvalue)(k) * t).exp()
                * (self.weight)(k)
                * (self.eigenfunction)(k, x)
                * (self.eigenfunction)(k, y)
        };
        let bound = |n: usize| ((self.eigenvalue)(n as f64) * t).exp() * (self.term_bound)(n as f64, x, y);
        match self.max_terms {
            Some(cap) => {
                let end = self.first_index + cap;
                let value: f64 = (self.first_index..end).map(term).sum();
                // Tail beyond the cap, summed until it is negligible.
                let mut tail = 0.0;
                for n in end..end + 100_000 {
                    let b = bound(n);
                    tail += b;
                    if b < 1e-3 * tail.max(f64::MIN_POSITIVE) && n > end + 10 {
                        break;
                    }
                }
                if tail > tol {
                    return Err(self.slow(t, tail));
                }
                Ok(value)
            }
            None => {
                if t < self.small_t_floor {
                    return Err(self.slow(t, bound(self.first_index)));
                }
                let (v, b, ok) = sum_series(self.first_index, tol, 1_000_000, term, bound);
                if !ok {
                    return Err(self.slow(t, b));
                }
                Ok(v)
            }
        }
    }

    fn band_integral(&self, t: f64, x: f64, y: f64, tol: f64) -> Result<f64> {
        let (lo, hi) = self.band;
        let b = (self.term_bound)(0.0, x, y);
        let base = ((self.eigenvalue)(0.0) * t).exp();
        let two_sided = if lo.is_infinite() { 2.0 } else { 1.0 };
        // ∫_Z^∞ B e^{λ(0)t} e^{-tz²/2} dz on each open side.
        let tail = |z: f64| two_sided * b * base * (PI / (2.0 * t)).sqrt() * libm::erfc(z * (0.5 * t).sqrt());
        if t < self.small_t_floor {
            return Err(self.slow(t, tail(0.0)));
        }
        let mut cut = 1.0;
        while tail(cut) >= 0.1 * tol {
            cut *= 1.25;
            if cut > 1e8 {
                return Err(self.slow(t, tail(cut)));
            }
        }
        let f = |z: f64| {
            ((self.eigenvalue)(z) * t).exp()
                * (self.weight)(z)
                * (self.eigenfunction)(z, x)
                * (self.eigenfunction)(z, y)
        };
        let a = if lo.is_infinite() { -cut } else { lo };
        let c = if hi.is_infinite() { cut } else { hi };
        let mut q = Quadrature::with_tol(0.1 * tol);
        q.rel_tol = 1e-13;
        q.integrate_with_breaks(f, a, c, &[0.0])
            .map(|(r, _)| r.value)
            .map_err(|e| Error::QuadratureFailure(format!("spectral band at t = {t}: {e}")))
    }
}

// Line with the cosh seed: one bound state at -1/2 and the band below -1.

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

const E1_BOUND: [BoundState; 1] = [BoundState {
    eigenvalue: -0.5,
    eigenfunction: sech,
    weight: 0.5,
}];

fn band_eigenvalue(z: f64) -> f64 {
    -(1.0 + 0.5 * z * z)
}

/// Real and imaginary parts of `e^{izx}(iz - tanh x)`, folded onto the line:
/// `z ≥ 0` gives the real part, `z < 0` the imaginary part at `|z|`.
fn e1_band_fn(z: f64, x: f64) -> f64 {
    let a = z.abs();
    let (s, c) = (a * x).sin_cos();
    let th = x.tanh();
    if z >= 0.0 {
        -th * c - a * s
    } else {
        a * c - th * s
    }
}

fn e1_weight(z: f64) -> f64 {
    1.0 / (PI * (1.0 + z * z))
}

fn e1_bound(_: f64, _: f64, _: f64) -> f64 {
    2.0 / PI
}

pub(crate) fn e1_form() -> SpectralForm {
    SpectralForm {
        kind: SpectralKind::Mixed,
        bound_states: &E1_BOUND,
        eigenvalue: band_eigenvalue,
        eigenfunction: e1_band_fn,
        weight: e1_weight,
        first_index: 0,
        band: (f64::NEG_INFINITY, f64::INFINITY),
        term_bound: e1_bound,
        max_terms: None,
        small_t_floor: 0.01,
    }
}

// Half-line with the sinh seed: pure band, no bound state.

fn e2_band_fn(z: f64, x: f64) -> f64 {
    z * (z * x).cos() - (z * x).sin() / x.tanh()
}

fn e2_weight(z: f64) -> f64 {
    2.0 / (PI * (1.0 + z * z))
}

fn e2_bound(_: f64, x: f64, y: f64) -> f64 {
    2.0 / PI * (1.0 + x / x.tanh()) * (1.0 + y / y.tanh())
}

pub(crate) fn e2_form() -> SpectralForm {
    SpectralForm {
        kind: SpectralKind::ContinuousIntegral,
        bound_states: &[],
        eigenvalue: band_eigenvalue,
        eigenfunction: e2_band_fn,
        weight: e2_weight,
        first_index: 0,
        band: (0.0, f64::INFINITY),
        term_bound: e2_bound,
        max_terms: None,
        small_t_floor: 0.01,
    }
}

// Unit interval with the sine seed: the first mode is removed.

fn e4_eigenvalue(n: f64) -> f64 {
    -0.5 * PI * PI * (n * n - 2.0)
}

fn e4_fn(n: f64, x: f64) -> f64 {
    e4_f(n as usize, x)
}

fn e4_weight(n: f64) -> f64 {
    2.0 / (n * n - 1.0)
}

fn e4_bound(n: f64, _: f64, _: f64) -> f64 {
    8.0 * n * n / (n * n - 1.0)
}

pub(crate) fn e4_form() -> SpectralForm {
    SpectralForm {
        kind: SpectralKind::DiscreteSeries,
        bound_states: &[],
        eigenvalue: e4_eigenvalue,
        eigenfunction: e4_fn,
        weight: e4_weight,
        first_index: 2,
        band: (0.0, 0.0),
        term_bound: e4_bound,
        max_terms: None,
        small_t_floor: 0.01,
    }
}

// Quadratic killing: ground state 1/h, then exceptional Hermite modes.

/// Largest value of `|H_n(x)| e^{-x²/2} / sqrt(2^n n!)` over all `n` and `x`.
const CRAMER: f64 = 1.086_435;

fn e5_ground(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * x * x + 1.0)
}

const E5_BOUND: [BoundState; 1] = [BoundState {
    eigenvalue: -2.5,
    eigenfunction: e5_ground,
    weight: 2.0 / 1.772_453_850_905_516, // 1 / ν(ℝ), ν(ℝ) = √π / 2
}];

fn e5_eigenvalue(n: f64) -> f64 {
    -(n + 5.5)
}

/// `Q_n(x) / (h(x) sqrt(2^{n+1} n!))` with `h = e^{x²/2}(2x²+1)`.
pub(crate) fn e5_fn(n: f64, x: f64) -> f64 {
    let n = n as usize;
    let hn = hermite_normalized(n, x);
    let first = if n == 0 {
        0.0
    } else {
        (n as f64).sqrt() * (2.0 * x * x + 1.0) * hn[n - 1]
    };
    let q = first - (4.0 * x * x * x + 6.0 * x) * hn[n] / std::f64::consts::SQRT_2;
    q * e5_ground(x)
}

fn e5_weight(n: f64) -> f64 {
    1.0 / (PI.sqrt() * (n + 3.0))
}

fn e5_bound(n: f64, x: f64, y: f64) -> f64 {
    let b = |x: f64| {
        CRAMER * (n.sqrt() + (4.0 * x * x * x + 6.0 * x).abs() / ((2.0 * x * x + 1.0) * std::f64::consts::SQRT_2))
    };
    e5_weight(n) * b(x) * b(y)
}

pub(crate) fn e5_form() -> SpectralForm {
    SpectralForm {
        kind: SpectralKind::DiscreteSeries,
        bound_states: &E5_BOUND,
        eigenvalue: e5_eigenvalue,
        eigenfunction: e5_fn,
        weight: e5_weight,
        first_index: 0,
        band: (0.0, 0.0),
        term_bound: e5_bound,
        max_terms: Some(60),
        small_t_floor: 0.25,
    }
}
