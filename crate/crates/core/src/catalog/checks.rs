use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::darboux::{apply_dh, eigen_residual, SeedFunction};
use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::math::diff::central5;
use crate::math::special::{exp_normal_cdf, hermite_poly, normal_cdf};
use crate::math::{Interval, Quadrature, ScalarField};

use super::kernels::{e4_level1, e4_level2};

/// Polynomial part of the transformed Hermite eigenfunctions, of degree
/// `n + 3`: `2n(2y²+1) H_{n-1}(y) - (4y³+6y) H_n(y)`.
pub fn qn_poly(n: usize, y: f64) -> f64 {
    let first = if n == 0 {
        0.0
    } else {
        2.0 * n as f64 * (2.0 * y * y + 1.0) * hermite_poly(n - 1, y)
    };
    first - (4.0 * y * y * y + 6.0 * y) * hermite_poly(n, y)
}

/// Which form of the transform identity for products of eigenfunctions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma51Form {
    /// `f̃ g̃ = (f g̃)' + 2(λ - μ) f g`, the derivative of the integrated form.
    Antiderivative,
    /// `Wr[f̃, g̃] = 2(λ - μ) Wr[f, g]`.
    Wronskian,
}

const LEMMA_PRE_TOL: f64 = 1e-6;

fn eigen_precondition(spec: &DiffusionSpec, f: &ScalarField, mu: f64, grid: &[f64]) -> Result<()> {
    for &x in grid {
        let rel = eigen_residual(spec, f, mu, x)?;
        if !(rel <= LEMMA_PRE_TOL) {
            return Err(Error::PreconditionResidual {
                residual: rel,
                tol: LEMMA_PRE_TOL,
            });
        }
    }
    Ok(())
}

/// Maximum residual over `grid` of the chosen identity, with `f̃ = 𝒟_h f`
/// and `g̃ = 𝒟_h g`. `g` (and for the Wronskian form also `f`) must solve
/// `L u = μ u`. Both fields need analytic derivatives.
pub fn lemma51_check(
    spec: &DiffusionSpec,
    seed: &SeedFunction,
    f: &ScalarField,
    g: &ScalarField,
    mu: f64,
    grid: &[f64],
    form: Lemma51Form,
) -> Result<f64> {
    if !(f.has_analytic_derivative() && g.has_analytic_derivative()) {
        return Err(Error::Unsupported("identity check needs analytic derivatives".into()));
    }
    eigen_precondition(spec, g, mu, grid)?;
    if form == Lemma51Form::Wronskian {
        eigen_precondition(spec, f, mu, grid)?;
    }
    let shift = 2.0 * (seed.lambda - mu);
    let ft = |u: f64| apply_dh(seed, f, u).unwrap_or(f64::NAN);
    let gt = |u: f64| apply_dh(seed, g, u).unwrap_or(f64::NAN);
    let dom = spec.interval;
    let mut worst = 0.0_f64;
    for &x in grid {
        // Near a finite end the coefficients vary on the scale of the
        // distance to it, so the stencil shrinks accordingly.
        let dist = (x - dom.left).min(dom.right - x);
        let step = 1e-4 * (1.0 + x.abs()).min(2.0 * dist);
        let r = match form {
            Lemma51Form::Antiderivative => {
                let d = central5(|u| f.eval(u) * gt(u), x, step);
                ft(x) * gt(x) - d - shift * f.eval(x) * g.eval(x)
            }
            Lemma51Form::Wronskian => {
                let wr_t = ft(x) * central5(gt, x, step) - central5(ft, x, step) * gt(x);
                let wr = f.eval(x) * g.derivative(x)? - f.derivative(x)? * g.eval(x);
                wr_t - shift * wr
            }
        };
        if r.is_nan() {
            return Err(Error::DomainMargin { x, step });
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendixIdentity {
    A1,
    A2,
    A3,
}

impl FromStr for AppendixIdentity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A1" => Ok(Self::A1),
            "A2" => Ok(Self::A2),
            "A3" => Ok(Self::A3),
            _ => Err(Error::InvalidSpec(format!("unknown identity `{s}`"))),
        }
    }
}

impl fmt::Display for AppendixIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// `|LHS - RHS|` for the Gaussian-Cauchy Fourier identities, the left side
/// by quadrature over `|z| ≤ sqrt(74/t)` (the discarded tail is below e^{-37}).
pub fn appendix_a_check(identity: AppendixIdentity, t: f64, w: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidSpec(format!("t must be positive, got {t}")));
    }
    let cut = (2.0 * 37.0 / t).sqrt();
    let s = t.sqrt();
    let gauss = move |z: f64| (-0.5 * t * z * z).exp() / (1.0 + z * z);
    let (integrand, pre): (Box<dyn Fn(f64) -> f64>, f64) = match identity {
        AppendixIdentity::A1 => (
            Box::new(move |z| gauss(z) * ((z * w).cos() + z * (z * w).sin())),
            w.exp() / (2.0 * PI),
        ),
        AppendixIdentity::A2 => (Box::new(move |z| gauss(z) * (z * w).cos()), 1.0 / (2.0 * PI)),
        AppendixIdentity::A3 => (Box::new(move |z| gauss(z) * z * (z * w).sin()), -1.0 / (2.0 * PI)),
    };
    let mut q = Quadrature::with_tol(1e-14);
    q.max_segments = 20_000;
    let lhs = pre
        * q.integrate_with_breaks(&integrand, -cut, cut, &[0.0])
            .map_err(|e| Error::QuadratureFailure(format!("{identity} at t = {t}, w = {w}: {e}")))?
            .0
            .value;
    let plus = exp_normal_cdf(0.5 * t + w, -(w + t) / s);
    let minus = exp_normal_cdf(0.5 * t - w, (w - t) / s);
    let rhs = match identity {
        AppendixIdentity::A1 => (0.5 * t).exp() * normal_cdf((w - t) / s),
        AppendixIdentity::A2 => 0.5 * (plus + minus),
        AppendixIdentity::A3 => 0.5 * (plus - minus),
    };
    Ok((lhs - rhs).abs())
}

/// Below this time the iterated series on (0, 1) is reported as slow.
pub const E4_SERIES_FLOOR: f64 = 0.01;

/// Kernel after one (`level = 1`) or two (`level = 2`) transforms of Brownian
/// motion killed at both ends of (0, 1), truncated to error below 1e-14.
pub fn iterated_transform_e4(level: u8, t: f64, x: f64, y: f64) -> Result<f64> {
    let tol = 1e-14;
    let (v, bound, ok) = match level {
        1 => e4_level1(t, x, y, tol),
        2 => e4_level2(t, x, y, tol),
        _ => return Err(Error::Unsupported(format!("transform level {level}"))),
    };
    if t < E4_SERIES_FLOOR || !ok {
        return Err(Error::SlowConvergence {
            t,
            floor: E4_SERIES_FLOOR,
            bound,
        });
    }
    Ok(v)
}

/// Seed of the second transform on (0, 1): `h₁ = -f_2 = 2 sin²(πy)` with
/// eigenvalue `-π²` for the once-transformed process.
pub fn e4_second_seed() -> SeedFunction {
    let h = ScalarField::new(Interval::unit(), |y: f64| 2.0 * (PI * y).sin().powi(2))
        .with_derivative(|y: f64| 2.0 * PI * (2.0 * PI * y).sin());
    SeedFunction::new(h, -PI * PI)
}
