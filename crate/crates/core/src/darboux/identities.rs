use std::cell::RefCell;

use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::math::diff::{central5, central5_second};
use crate::math::quadrature::quad_adaptive;
use crate::math::roots::invert_increasing;
use crate::math::ScalarField;

use super::{d1, d2, fine_step, SeedFunction};

/// Relative tolerance on the eigen-equation a test function must satisfy.
const PRE_TOL: f64 = 1e-6;

/// `(𝒟_h f)(x) = f'(x) - (h'/h)(x) f(x)`.
pub fn apply_dh(seed: &SeedFunction, f: &ScalarField, x: f64) -> Result<f64> {
    Ok(d1(f, x)? - seed.log_derivative(x) * f.eval(x))
}

/// Residual of `½f'' - c f = eig f` at `x`, relative to the local size of
/// the equation's terms. The amplitude `sqrt(f² + f'²/k²)` with
/// `k² = 2|eig + c|` keeps the ratio meaningful at zeros of oscillating `f`.
pub(crate) fn eigen_residual(spec: &DiffusionSpec, f: &ScalarField, eig: f64, x: f64) -> Result<f64> {
    let v = f.eval(x);
    let f1 = d1(f, x)?;
    let f2 = d2(f, x)?;
    let c = spec.killing.eval(x);
    let r = 0.5 * f2 - c * v - eig * v;
    let k2 = 2.0 * (eig + c).abs();
    let amp = if k2 > 0.0 {
        (v * v + f1 * f1 / k2).sqrt()
    } else {
        v.abs()
    };
    let scale = 0.5 * f2.abs() + (eig + c).abs() * amp;
    Ok(if scale > 0.0 { r.abs() / scale } else { r.abs() })
}

/// `|L̃(𝒟_h f)(x) - μ (𝒟_h f)(x)|` for `f` with `L f = (μ + m_h + 2λ) f`.
pub fn intertwine_residual(
    spec: &DiffusionSpec,
    seed: &SeedFunction,
    m_h: f64,
    f: &ScalarField,
    mu: f64,
    x: f64,
) -> Result<f64> {
    let pre = eigen_residual(spec, f, mu + m_h + 2.0 * seed.lambda, x)?;
    if !(pre <= PRE_TOL) {
        return Err(Error::PreconditionResidual {
            residual: pre,
            tol: PRE_TOL,
        });
    }
    let step = 5e-4 * (1.0 + x.abs());
    let df = f.derivative_field();
    let g = |u: f64| df.eval(u) - seed.log_derivative(u) * f.eval(u);
    let g0 = g(x);
    let g2 = central5_second(g, x, step);
    let l = seed.log_derivative(x);
    let rate = m_h + l * l - spec.killing.eval(x);
    Ok((0.5 * g2 - rate * g0 - mu * g0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationResiduals {
    /// `|½𝒟_{1/h}𝒟_h f - (L - λ) f|`
    pub first: f64,
    /// `|½𝒟_h𝒟_{1/h} g - (½g'' - c̃ g + (m_h + λ) g)|`
    pub second: f64,
}

/// Both factorizations of the shifted generators, applied to `f` and `g` at `x`.
pub fn factorization_residuals(
    spec: &DiffusionSpec,
    seed: &SeedFunction,
    m_h: f64,
    f: &ScalarField,
    g: &ScalarField,
    x: f64,
) -> Result<FactorizationResiduals> {
    let step = fine_step(x);
    let l = |u: f64| seed.log_derivative(u);
    let c = spec.killing.eval(x);
    let lam = seed.lambda;

    let df = f.derivative_field();
    let w = |u: f64| df.eval(u) - l(u) * f.eval(u);
    let lhs1 = 0.5 * (central5(w, x, step) + l(x) * w(x));
    let rhs1 = 0.5 * d2(f, x)? - (c + lam) * f.eval(x);

    let dg = g.derivative_field();
    let v = |u: f64| dg.eval(u) + l(u) * g.eval(u);
    let lhs2 = 0.5 * (central5(v, x, step) - l(x) * v(x));
    let rate = m_h + l(x) * l(x) - c;
    let rhs2 = 0.5 * d2(g, x)? - rate * g.eval(x) + (m_h + lam) * g.eval(x);

    Ok(FactorizationResiduals {
        first: (lhs1 - rhs1).abs(),
        second: (lhs2 - rhs2).abs(),
    })
}

/// Builds the string coordinates `u' = h²` and `v' = 2h⁻²` anchored at the
/// middle of `grid`, and returns `max |m(M(u)) - u|` over the grid, where
/// `M(u) = v(x(u))` and `m(v) = u(x(v))`. Each composition inverts a
/// quadrature-defined map by Newton steps.
pub fn krein_dual_check(seed: &SeedFunction, grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidSpec("string check needs at least two grid points".into()));
    }
    let h = &seed.h;
    let dom = h.domain();
    let anchor = grid[grid.len() / 2];
    let gmin = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ext = 0.1 * (gmax - gmin);
    let lo = (gmin - ext).max(0.5 * (dom.left + gmin));
    let hi = (gmax + ext).min(0.5 * (dom.right + gmax));

    let density_u = |x: f64| h.eval(x).powi(2);
    let density_v = |x: f64| 2.0 / h.eval(x).powi(2);
    let coord = |dens: &dyn Fn(f64) -> f64, x: f64| -> Result<f64> {
        if x == anchor {
            return Ok(0.0);
        }
        quad_adaptive(dens, anchor, x, 1e-14).map(|r| r.value)
    };
    let invert = |dens: &dyn Fn(f64) -> f64, target: f64| -> Result<f64> {
        let failure = RefCell::new(None);
        let x = invert_increasing(
            |x| match coord(dens, x) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            dens,
            target,
            lo,
            hi,
            1e-15,
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(x),
        }
    };

    let mut worst = 0.0_f64;
    for &x in grid {
        let u = coord(&density_u, x)?;
        let big_m = coord(&density_v, invert(&density_u, u)?)?;
        let back = coord(&density_u, invert(&density_v, big_m)?)?;
        worst = worst.max((back - u).abs());
    }
    Ok(worst)
}
