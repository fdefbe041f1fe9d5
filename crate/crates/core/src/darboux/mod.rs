//! Darboux transform of a killed Brownian motion: Doob transform with a seed
//! function, Siegmund dual, second Doob transform, and the density formula
//! that composes the three, together with the identities used to check them.

mod duality;
mod identities;
mod seed;
mod transform;

pub use duality::{siegmund_dual_density, siegmund_identity_check, siegmund_increment};
pub(crate) use identities::eigen_residual;
pub use identities::{
    apply_dh, factorization_residuals, intertwine_residual, krein_dual_check, FactorizationResiduals,
};
pub use seed::SeedFunction;
pub use transform::{
    compute_m_h, darboux_density, darboux_transform, doob_density, doob_kernel, inverse_doob_kernel, tilde_c,
    tilde_c_field, verify_lambda_invariance, DarbouxResult, InvarianceCheck, SupEstimate,
};

use crate::error::{Error, Result};
use crate::math::diff::{central5, central5_second};
use crate::math::ScalarField;

/// Step for five-point stencils applied to smooth closed forms.
pub(crate) fn fine_step(x: f64) -> f64 {
    1e-4 * (1.0 + x.abs())
}

fn margin_ok(f: &ScalarField, x: f64, step: f64) -> Result<()> {
    let dom = f.domain();
    if x - 2.0 * step > dom.left && x + 2.0 * step < dom.right {
        Ok(())
    } else {
        Err(Error::DomainMargin { x, step })
    }
}

/// First derivative: analytic when the field has one, else five-point.
pub(crate) fn d1(f: &ScalarField, x: f64) -> Result<f64> {
    if f.has_analytic_derivative() {
        return f.derivative(x);
    }
    let step = 1e-3 * (1.0 + x.abs());
    margin_ok(f, x, step)?;
    Ok(central5(|u| f.eval(u), x, step))
}

/// Second derivative: five-point on the analytic first derivative when
/// available, else the five-point second-difference stencil.
pub(crate) fn d2(f: &ScalarField, x: f64) -> Result<f64> {
    if f.has_analytic_derivative() {
        let step = fine_step(x);
        margin_ok(f, x, step)?;
        let df = f.derivative_field();
        return Ok(central5(|u| df.eval(u), x, step));
    }
    let step = 1e-3 * (1.0 + x.abs());
    margin_ok(f, x, step)?;
    Ok(central5_second(|u| f.eval(u), x, step))
}
