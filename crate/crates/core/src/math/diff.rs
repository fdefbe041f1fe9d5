use crate::error::{Error, Result};

use super::field::ScalarField;

/// Default finite-difference step `1e-5 (1 + |x|)`.
pub fn default_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// Central-difference estimate of the first or second derivative, with
/// O(step^2) truncation error.
///
/// Fails with [`Error::DomainMargin`] when `x ± 2 step` leaves the domain of `f`.
pub fn fd_derivative(f: &ScalarField, x: f64, order: u8, step: f64) -> Result<f64> {
    check_margin(f, x, step)?;
    match order {
        1 => Ok((f.eval(x + step) - f.eval(x - step)) / (2.0 * step)),
        2 => Ok((f.eval(x + step) - 2.0 * f.eval(x) + f.eval(x - step)) / (step * step)),
        _ => Err(Error::Unsupported(format!("derivative order {order}"))),
    }
}

fn check_margin(f: &ScalarField, x: f64, step: f64) -> Result<()> {
    let dom = f.domain();
    if !(step > 0.0) || !(x - 2.0 * step > dom.left && x + 2.0 * step < dom.right) {
        return Err(Error::DomainMargin { x, step });
    }
    Ok(())
}

/// Five-point central stencil for the first derivative, O(step^4).
pub fn central5(g: impl Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (-g(x + 2.0 * step) + 8.0 * g(x + step) - 8.0 * g(x - step) + g(x - 2.0 * step)) / (12.0 * step)
}

/// Five-point central stencil for the second derivative, O(step^4).
pub fn central5_second(g: impl Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (-g(x + 2.0 * step) + 16.0 * g(x + step) - 30.0 * g(x) + 16.0 * g(x - step) - g(x - 2.0 * step))
        / (12.0 * step * step)
}

/// Five-point first derivative of a field, with the same margin rule as
/// [`fd_derivative`].
pub fn fd5_derivative(f: &ScalarField, x: f64, step: f64) -> Result<f64> {
    check_margin(f, x, step)?;
    Ok(central5(|u| f.eval(u), x, step))
}

/// Five-point second derivative of a field.
pub fn fd5_second(f: &ScalarField, x: f64, step: f64) -> Result<f64> {
    check_margin(f, x, step)?;
    Ok(central5_second(|u| f.eval(u), x, step))
}

/// `Wr[f, g](x) = f g' - f' g`, using analytic derivatives where available.
pub fn wronskian_num(f: &ScalarField, g: &ScalarField, x: f64) -> Result<f64> {
    let df = f.derivative(x)?;
    let dg = g.derivative(x)?;
    Ok(f.eval(x) * dg - df * g.eval(x))
}
