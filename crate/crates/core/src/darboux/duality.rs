use crate::error::{Error, Result};
use crate::kernel::{finite_limits, TransitionKernel};
use crate::math::diff::central5;
use crate::math::Quadrature;

use super::fine_step;

/// `∫_a^b p_t(x, u) du` with infinite ends cut off.
fn kernel_mass(kernel: &TransitionKernel, t: f64, x: f64, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    kernel.integrate_against(t, x, a, b, |_| 1.0, 1e-12)
}

/// Density of the dual process, `∂_y ∫_x^r p^X_t(y, u) du`.
///
/// The survival mass is integrated once adaptively at `y` and the resulting
/// subdivision reused at the stencil points.
pub fn siegmund_dual_density(kernel_x: &TransitionKernel, t: f64, x: f64, y: f64) -> Result<f64> {
    let dom = kernel_x.domain();
    let step = fine_step(y);
    if !(y - 2.0 * step > dom.left && y + 2.0 * step < dom.right) {
        return Err(Error::DomainMargin { x: y, step });
    }
    let g = |eta: f64| move |u: f64| kernel_x.eval(t, eta, u);
    let g0 = g(y);
    let (_, hi) = finite_limits(&g0, x, dom.right, y, t.sqrt());
    let (_, partition) = Quadrature::with_tol(1e-12)
        .integrate_with_breaks(g0, x, hi, &[y])
        .map_err(|e| Error::QuadratureFailure(format!("survival mass at ({t}, {y}): {e}")))?;
    Ok(central5(|eta| partition.apply(g(eta)), y, step))
}

/// Spread over `grid` of `x ↦ P_x(X_t ≤ y) - P_y(X̃_t > x)`, which the
/// duality makes constant.
pub fn siegmund_identity_check(
    kernel_x: &TransitionKernel,
    kernel_xtilde: &TransitionKernel,
    t: f64,
    y: f64,
    grid: &[f64],
) -> Result<f64> {
    let dom = kernel_x.domain();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in grid {
        let below = kernel_mass(kernel_x, t, x, dom.left, y)?;
        let above = kernel_mass(kernel_xtilde, t, y, x, dom.right)?;
        let v = below - above;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// `∫_{x1}^{x2} p^X̃_t(y, v) dv`: the amount by which `P_x(X_t ≤ y)` drops
/// between `x1` and `x2`.
pub fn siegmund_increment(kernel_xtilde: &TransitionKernel, t: f64, y: f64, x1: f64, x2: f64) -> Result<f64> {
    kernel_mass(kernel_xtilde, t, y, x1, x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{BoundaryCondition, DiffusionSpec};
    use crate::kernel::Provenance;
    use crate::math::special::heat_kernel;
    use crate::math::{Interval, ScalarField};

    fn kernel(interval: Interval, left: BoundaryCondition, f: fn(f64, f64, f64) -> f64) -> TransitionKernel {
        let spec = DiffusionSpec::killed_bm(
            interval,
            ScalarField::constant(interval, 0.0),
            left,
            BoundaryCondition::NotApplicable,
        )
        .unwrap();
        TransitionKernel::new(spec, Provenance::ClosedForm, f)
    }

    #[test]
    fn bm_is_self_dual() {
        let bm = kernel(Interval::real_line(), BoundaryCondition::NotApplicable, heat_kernel);
        for (x, y) in [(0.0, 0.4), (1.0, -0.5)] {
            let d = siegmund_dual_density(&bm, 0.7, x, y).unwrap();
            assert!((d - heat_kernel(0.7, x, y)).abs() < 1e-9);
        }
        let grid: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        assert!(siegmund_identity_check(&bm, &bm, 0.5, 0.3, &grid).unwrap() < 1e-10);
        assert_eq!(siegmund_increment(&bm, 0.5, 0.3, 0.7, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn reflected_bm_dualizes_to_absorbed_bm() {
        let half = Interval::positive_half_line();
        let refl = kernel(half, BoundaryCondition::Reflecting, |t, x, y| {
            heat_kernel(t, x, y) + heat_kernel(t, x, -y)
        });
        let absorbed = kernel(half, BoundaryCondition::Killing, |t, x, y| {
            heat_kernel(t, x, y) - heat_kernel(t, x, -y)
        });
        for (x, y) in [(0.5, 0.8), (1.5, 0.3)] {
            let d = siegmund_dual_density(&refl, 1.0, x, y).unwrap();
            assert!((d - absorbed.eval(1.0, x, y)).abs() < 1e-9, "{d}");
        }
        let grid: Vec<f64> = (1..10).map(|i| 0.3 * i as f64).collect();
        assert!(siegmund_identity_check(&refl, &absorbed, 0.5, 0.7, &grid).unwrap() < 1e-10);
    }
}
