use crate::diffusion::{BoundaryCondition, DiffusionSpec, Side};
use crate::error::{Error, Result};
use crate::math::ScalarField;

use super::{d1, d2};

/// A positive `h` with `½h'' - c h = λ h`, used as the seed of a transform.
#[derive(Debug, Clone)]
pub struct SeedFunction {
    pub h: ScalarField,
    pub h_prime: ScalarField,
    pub lambda: f64,
    /// Set when `h'` is only available by finite differences.
    pub numeric_derivative: bool,
}

/// Relative tolerance of the eigen-equation residual.
const ODE_TOL: f64 = 1e-6;
/// Relative tolerance of boundary-condition extrapolation.
const BC_TOL: f64 = 1e-6;

impl SeedFunction {
    /// Takes `h'` from the field when it carries one, otherwise falls back to
    /// finite differences and flags the seed.
    pub fn new(h: ScalarField, lambda: f64) -> Self {
        let numeric_derivative = !h.has_analytic_derivative();
        if numeric_derivative {
            log::warn!("seed function has no analytic derivative; using finite differences");
        }
        let h_prime = h.derivative_field();
        Self {
            h,
            h_prime,
            lambda,
            numeric_derivative,
        }
    }

    /// `h'(y) / h(y)`
    #[inline]
    pub fn log_derivative(&self, y: f64) -> f64 {
        self.h_prime.eval(y) / self.h.eval(y)
    }

    /// Relative residual of `½h'' - c h - λ h` at `y`.
    pub fn ode_residual(&self, spec: &DiffusionSpec, y: f64) -> Result<f64> {
        let h = self.h.eval(y);
        let h2 = d2(&self.h, y)?;
        let c = spec.killing.eval(y);
        let r = 0.5 * h2 - c * h - self.lambda * h;
        let scale = 0.5 * h2.abs() + (c * h).abs() + (self.lambda * h).abs();
        Ok(if scale > 0.0 { r.abs() / scale } else { r.abs() })
    }

    /// Checks positivity, the eigen-equation and the boundary condition at
    /// every end where `spec` imposes one.
    pub fn validate(&self, spec: &DiffusionSpec) -> Result<()> {
        let dom = spec.interval;
        for y in dom.probe_grid(41, 1e-2, 6.0) {
            let h = self.h.eval(y);
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidSeed(format!("h({y}) = {h} is not positive")));
            }
            let r = self.ode_residual(spec, y)?;
            if !(r <= ODE_TOL) {
                return Err(Error::InvalidSeed(format!("eigen-equation residual {r:e} at y = {y}")));
            }
        }
        let scale = self.h.eval(dom.reference_point()).abs();
        for side in [Side::Left, Side::Right] {
            let bc = spec.bc(side);
            if bc == BoundaryCondition::NotApplicable {
                continue;
            }
            let (h0, dh0) = self.boundary_values(spec, side)?;
            let miss = match bc {
                BoundaryCondition::Killing => h0,
                BoundaryCondition::Reflecting => dh0,
                BoundaryCondition::Elastic(g) => match side {
                    Side::Left => dh0 - g * h0,
                    Side::Right => dh0 + g * h0,
                },
                BoundaryCondition::NotApplicable => 0.0,
            };
            if !(miss.abs() <= BC_TOL * scale) {
                return Err(Error::InvalidSeed(format!(
                    "{bc} condition violated at the {side:?} end: residual {miss:e}"
                )));
            }
        }
        Ok(())
    }

    /// `(h, h')` at a finite end, by cubic extrapolation from interior points.
    pub fn boundary_values(&self, spec: &DiffusionSpec, side: Side) -> Result<(f64, f64)> {
        let end = spec.end(side);
        if !end.is_finite() {
            return Err(Error::InvalidSpec("no boundary value at an infinite end".into()));
        }
        let dir = if side == Side::Left { 1.0 } else { -1.0 };
        let dom = spec.interval;
        let width = if dom.is_bounded() { dom.right - dom.left } else { 1.0 };
        let step = 1e-3 * width.min(1.0);
        let at = |k: f64| end + dir * k * step;
        // Lagrange extrapolation to 0 from nodes 1, 2, 3, 4.
        let weights = [4.0, -6.0, 4.0, -1.0];
        let mut h0 = 0.0;
        let mut dh0 = 0.0;
        for (i, w) in weights.iter().enumerate() {
            let y = at(i as f64 + 1.0);
            h0 += w * self.h.eval(y);
            dh0 += w * d1(&self.h, y)?;
        }
        Ok((h0, dh0))
    }
}
