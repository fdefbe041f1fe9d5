//! Transition densities `p_t(x, y)` with respect to Lebesgue measure.

use std::fmt;
use std::sync::Arc;

use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::math::quadrature::tail_cutoff;
use crate::math::{Interval, Quadrature};

/// How a kernel's values are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    QuadratureBuilt,
    Spectral,
    MonteCarlo,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::QuadratureBuilt => "quadrature-built",
            Provenance::Spectral => "spectral",
            Provenance::MonteCarlo => "monte-carlo",
        };
        f.write_str(s)
    }
}

pub type KernelFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TransitionKernel {
    eval: KernelFn,
    pub provenance: Provenance,
    pub spec: DiffusionSpec,
}

impl fmt::Debug for TransitionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionKernel")
            .field("provenance", &self.provenance)
            .field("interval", &self.spec.interval)
            .finish()
    }
}

/// Relative size below which an integrand tail is dropped when an infinite
/// limit is replaced by a finite one.
const TAIL_REL: f64 = 1e-17;

/// Replaces infinite ends of `(a, b)` by points beyond which `g` is
/// negligible. `center` is where `g` is expected to be large and `scale` its
/// typical width.
pub fn finite_limits(g: &dyn Fn(f64) -> f64, a: f64, b: f64, center: f64, scale: f64) -> (f64, f64) {
    let lo = if a.is_finite() {
        a
    } else {
        let start = if b.is_finite() { center.min(b) } else { center };
        tail_cutoff(g, start, -1.0, scale, TAIL_REL)
    };
    let hi = if b.is_finite() {
        b
    } else {
        let start = if a.is_finite() { center.max(a) } else { center };
        tail_cutoff(g, start, 1.0, scale, TAIL_REL)
    };
    (lo, hi)
}

impl TransitionKernel {
    pub fn new(
        spec: DiffusionSpec,
        provenance: Provenance,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(f),
            provenance,
            spec,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.eval)(t, x, y)
    }

    pub fn domain(&self) -> Interval {
        self.spec.interval
    }

    /// `∫_a^b p_t(x, u) w(u) du`, with infinite limits cut where the
    /// integrand is negligible. Zero kernel values are never multiplied by
    /// `w`, so weights that overflow far out are harmless.
    pub fn integrate_against(&self, t: f64, x: f64, a: f64, b: f64, w: impl Fn(f64) -> f64, tol: f64) -> Result<f64> {
        let g = |u: f64| {
            let p = self.eval(t, x, u);
            if p == 0.0 {
                0.0
            } else {
                p * w(u)
            }
        };
        let (lo, hi) = finite_limits(&g, a, b, x, t.sqrt());
        Quadrature::with_tol(tol)
            .integrate_with_breaks(g, lo, hi, &[x])
            .map(|(r, _)| r.value)
            .map_err(|e| Error::QuadratureFailure(format!("kernel integral at t={t}, x={x}: {e}")))
    }

    /// Total mass `∫ p_t(x, y) dy` over the state space.
    pub fn mass(&self, t: f64, x: f64) -> Result<f64> {
        let dom = self.domain();
        self.integrate_against(t, x, dom.left, dom.right, |_| 1.0, 1e-11)
    }

    /// `|∫ p_s(x, z) p_t(z, y) dz - p_{s+t}(x, y)|`.
    pub fn chapman_kolmogorov_residual(&self, s: f64, t: f64, x: f64, y: f64) -> Result<f64> {
        let dom = self.domain();
        let g = |z: f64| {
            let a = self.eval(s, x, z);
            if a == 0.0 {
                0.0
            } else {
                a * self.eval(t, z, y)
            }
        };
        let center = (s * y + t * x) / (s + t);
        let (lo, hi) = finite_limits(&g, dom.left, dom.right, center, (s * t / (s + t)).sqrt());
        let conv = Quadrature::with_tol(1e-11)
            .integrate_with_breaks(g, lo, hi, &[x, y])
            .map_err(|e| Error::QuadratureFailure(e.to_string()))?
            .0
            .value;
        Ok((conv - self.eval(s + t, x, y)).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::BoundaryCondition;
    use crate::math::special::heat_kernel;
    use crate::math::ScalarField;

    fn bm_kernel() -> TransitionKernel {
        let line = Interval::real_line();
        let spec = DiffusionSpec::killed_bm(
            line,
            ScalarField::constant(line, 0.0),
            BoundaryCondition::NotApplicable,
            BoundaryCondition::NotApplicable,
        )
        .unwrap();
        TransitionKernel::new(spec, Provenance::ClosedForm, heat_kernel)
    }

    #[test]
    fn gaussian_mass_and_moments() {
        let k = bm_kernel();
        assert!((k.mass(0.7, 0.3).unwrap() - 1.0).abs() < 1e-12);
        let mean = k
            .integrate_against(0.7, 0.3, f64::NEG_INFINITY, f64::INFINITY, |u| u, 1e-12)
            .unwrap();
        assert!((mean - 0.3).abs() < 1e-12);
        // E cosh(x + W_t) = e^{t/2} cosh x
        let m = k
            .integrate_against(2.0, 0.4, f64::NEG_INFINITY, f64::INFINITY, f64::cosh, 1e-12)
            .unwrap();
        assert!((m / (1.0_f64.exp() * 0.4_f64.cosh()) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn gaussian_semigroup_property() {
        let k = bm_kernel();
        for (x, y) in [(0.0, 0.0), (0.5, -1.2), (2.0, 2.5)] {
            assert!(k.chapman_kolmogorov_residual(0.3, 0.4, x, y).unwrap() < 1e-12);
        }
    }

    #[test]
    fn finite_limits_keep_finite_ends() {
        let g = |u: f64| (-u * u).exp();
        assert_eq!(finite_limits(&g, -1.0, 2.0, 0.0, 1.0), (-1.0, 2.0));
        let (lo, hi) = finite_limits(&g, f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0);
        assert!(lo < -6.0 && hi > 6.0 && lo.is_finite() && hi.is_finite());
    }
}
