use crate::diffusion::{classify_boundary, BoundaryClass, BoundaryCondition, DiffusionSpec, Side};
use crate::error::{Error, Result};
use crate::kernel::{finite_limits, Provenance, TransitionKernel};
use crate::math::diff::central5;
use crate::math::{linspace, Quadrature, ScalarField};

use super::{fine_step, SeedFunction};

/// Grid supremum of `c - (h'/h)^2` and how much local refinement and
/// boundary probing raised it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub refinement: f64,
    pub argmax: f64,
}

/// Values below this are clamped to zero in `c̃`; below `-NEG_TOL` they are
/// reported as an inconsistent `m_h`.
const NEG_TOL: f64 = 1e-10;

/// `sup_y [c(y) - (h'(y)/h(y))^2]` over `grid`, refined around the grid
/// maximizer and probed towards both ends of the interval.
pub fn compute_m_h(spec: &DiffusionSpec, seed: &SeedFunction, grid: &[f64]) -> Result<SupEstimate> {
    let dom = spec.interval;
    let v = |y: f64| {
        let l = seed.log_derivative(y);
        spec.killing.eval(y) - l * l
    };
    let pts: Vec<f64> = grid.iter().copied().filter(|&y| dom.contains(y)).collect();
    if pts.len() < 3 {
        return Err(Error::InvalidSpec(
            "m_h needs at least three interior grid points".into(),
        ));
    }
    let vals: Vec<f64> = pts.iter().map(|&y| v(y)).collect();
    if let Some(i) = vals.iter().position(|x| x.is_nan()) {
        return Err(Error::InvalidSeed(format!("c - (h'/h)^2 is NaN at {}", pts[i])));
    }
    let (imax, &vmax) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    if vmax == f64::INFINITY {
        return Err(Error::Unbounded(vmax));
    }
    let vmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if vmax - vmin <= 1e-12 * (1.0 + vmax.abs()) {
        return Ok(SupEstimate {
            value: vmax,
            refinement: 0.0,
            argmax: pts[imax],
        });
    }

    let mut best = vmax;
    let mut argmax = pts[imax];
    // Local refinement between the neighbours of the grid maximizer.
    let lo = pts[imax.saturating_sub(1)];
    let hi = pts[(imax + 1).min(pts.len() - 1)];
    let (mut a, mut b) = (lo, hi);
    for _ in 0..6 {
        let fine = linspace(a, b, 21);
        let (j, fv) = fine
            .iter()
            .map(|&y| v(y))
            .enumerate()
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        if fv > best {
            best = fv;
            argmax = fine[j];
        }
        a = fine[j.saturating_sub(1)];
        b = fine[(j + 1).min(20)];
    }

    // Probe towards each end: halving the gap to a finite end, growing the
    // reach geometrically towards an infinite one. Probing stops where the
    // seed overflows.
    let first = pts[0];
    let last = *pts.last().unwrap();
    for (end, start) in [(dom.left, first), (dom.right, last)] {
        let mut probes = Vec::with_capacity(30);
        for k in 1..=30 {
            let y = if end.is_finite() {
                end + (start - end) * 0.5_f64.powi(k)
            } else {
                start + end.signum() * 1.5_f64.powi(k) * (1.0 + start.abs())
            };
            let val = v(y);
            if val.is_nan() {
                break;
            }
            probes.push((y, val));
        }
        if let Some(&(_, tail)) = probes.last() {
            let k = probes.len().min(10);
            let rising = k >= 5 && probes[probes.len() - k..].windows(2).all(|w| w[1].1 > w[0].1);
            if tail == f64::INFINITY || (rising && tail > 1e3 * (1.0 + vmax.abs())) {
                return Err(Error::Unbounded(tail));
            }
        }
        for (y, val) in probes {
            if val > best {
                best = val;
                argmax = y;
            }
        }
    }
    Ok(SupEstimate {
        value: best,
        refinement: best - vmax,
        argmax,
    })
}

/// `c̃(y) = m_h + (h'/h)^2 - c`, with tiny negatives clamped to zero.
pub fn tilde_c(spec: &DiffusionSpec, seed: &SeedFunction, m_h: f64, y: f64) -> Result<f64> {
    let l = seed.log_derivative(y);
    let rate = m_h + l * l - spec.killing.eval(y);
    if rate < -NEG_TOL {
        return Err(Error::NegativeRate { y, rate });
    }
    Ok(rate.max(0.0))
}

/// `c̃` as a field. Values are clamped like [`tilde_c`] but not rejected, so
/// callers should validate on a grid first.
pub fn tilde_c_field(spec: &DiffusionSpec, seed: &SeedFunction, m_h: f64) -> ScalarField {
    let spec = spec.clone();
    let seed = seed.clone();
    ScalarField::new(spec.interval, move |y| {
        let l = seed.log_derivative(y);
        let rate = m_h + l * l - spec.killing.eval(y);
        if (-NEG_TOL..0.0).contains(&rate) {
            0.0
        } else {
            rate
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceCheck {
    pub residual: f64,
    pub pass: bool,
}

/// Relative residual of `∫ p_t(x, y) h(y) dy = e^{λt} h(x)`.
pub fn verify_lambda_invariance(
    kernel_y: &TransitionKernel,
    seed: &SeedFunction,
    t: f64,
    x: f64,
    tol: f64,
) -> Result<InvarianceCheck> {
    let dom = kernel_y.domain();
    let lhs = kernel_y.integrate_against(t, x, dom.left, dom.right, |u| seed.h.eval(u), 1e-12)?;
    let rhs = (seed.lambda * t).exp() * seed.h.eval(x);
    let residual = (lhs - rhs).abs() / rhs.abs();
    Ok(InvarianceCheck {
        residual,
        pass: residual < tol,
    })
}

/// Transition density of the transformed process,
/// `e^{-(m_h+2λ)t} h(x)/h(y) ∂_x[h(x)^{-1} ∫_y^r p_t(x,u) h(u) du]`.
///
/// The inner integral is computed once adaptively at `x`; the same
/// subdivision is reused at the shifted stencil points so the difference
/// quotient sees no adaptive noise.
pub fn darboux_density(
    kernel_y: &TransitionKernel,
    seed: &SeedFunction,
    m_h: f64,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    let dom = kernel_y.domain();
    let step = fine_step(x);
    if !(x - 2.0 * step > dom.left && x + 2.0 * step < dom.right) {
        return Err(Error::DomainMargin { x, step });
    }
    if !dom.contains(y) {
        return Err(Error::InvalidSpec(format!("y = {y} outside the state space")));
    }
    let integrand = |xi: f64| {
        move |u: f64| {
            let p = kernel_y.eval(t, xi, u);
            if p == 0.0 {
                0.0
            } else {
                p * seed.h.eval(u)
            }
        }
    };
    let g = integrand(x);
    let (_, hi) = finite_limits(&g, y, dom.right, x, t.sqrt());
    let (_, partition) = Quadrature::with_tol(1e-12)
        .integrate_with_breaks(g, y, hi, &[x])
        .map_err(|e| Error::QuadratureFailure(format!("inner integral at ({t}, {x}, {y}): {e}")))?;
    let bracket = |xi: f64| partition.apply(integrand(xi)) / seed.h.eval(xi);
    let deriv = central5(bracket, x, step);
    Ok((-(m_h + 2.0 * seed.lambda) * t).exp() * seed.h.eval(x) / seed.h.eval(y) * deriv)
}

/// Doob transform `e^{-λt} p_t(x, y) h(y) / h(x)`.
pub fn doob_density(kernel_y: &TransitionKernel, seed: &SeedFunction, t: f64, x: f64, y: f64) -> f64 {
    let p = kernel_y.eval(t, x, y);
    if p == 0.0 {
        return 0.0;
    }
    (-seed.lambda * t).exp() * p * seed.h.eval(y) / seed.h.eval(x)
}

fn log_h_field(seed: &SeedFunction) -> ScalarField {
    let h = seed.h.clone();
    ScalarField::new(h.domain(), move |x| 2.0 * h.eval(x).ln())
}

/// Kernel of the conservative process `X` with generator `½∂² + (h'/h)∂`.
/// Ends where `Y` reflects or is elastic become reflecting.
pub fn doob_kernel(kernel_y: &TransitionKernel, seed: &SeedFunction) -> Result<TransitionKernel> {
    let dom = kernel_y.domain();
    let reflect = |bc: BoundaryCondition| match bc {
        BoundaryCondition::Reflecting | BoundaryCondition::Elastic(_) => BoundaryCondition::Reflecting,
        _ => BoundaryCondition::NotApplicable,
    };
    let s = seed.clone();
    let spec = DiffusionSpec::new(
        dom,
        ScalarField::new(dom, move |x| s.log_derivative(x)),
        ScalarField::constant(dom, 1.0),
        ScalarField::constant(dom, 0.0),
        reflect(kernel_y.spec.left_bc),
        reflect(kernel_y.spec.right_bc),
        0.5,
    )?
    .with_scale_exponent(log_h_field(seed));
    let ky = kernel_y.clone();
    let s = seed.clone();
    Ok(TransitionKernel::new(spec, kernel_y.provenance, move |t, x, y| {
        doob_density(&ky, &s, t, x, y)
    }))
}

/// Kernel of `X̃` (generator `½∂² - (h'/h)∂`) recovered from the transformed
/// kernel: `e^{(m_h+λ)t} p̃_t(x, y) h(x) / h(y)`.
pub fn inverse_doob_kernel(
    kernel_ytilde: &TransitionKernel,
    seed: &SeedFunction,
    m_h: f64,
) -> Result<TransitionKernel> {
    let dom = kernel_ytilde.domain();
    let s = seed.clone();
    let spec = DiffusionSpec::new(
        dom,
        ScalarField::new(dom, move |x| -s.log_derivative(x)),
        ScalarField::constant(dom, 1.0),
        ScalarField::constant(dom, 0.0),
        kernel_ytilde.spec.left_bc,
        kernel_ytilde.spec.right_bc,
        0.5,
    )?;
    let h = seed.h.clone();
    let nu = m_h + seed.lambda;
    let kt = kernel_ytilde.clone();
    Ok(TransitionKernel::new(spec, kernel_ytilde.provenance, move |t, x, y| {
        let p = kt.eval(t, x, y);
        if p == 0.0 {
            return 0.0;
        }
        (nu * t).exp() * p * h.eval(x) / h.eval(y)
    }))
}

/// The transformed process: killing rate, boundary conditions and a
/// quadrature-built kernel, plus notes on the reflecting-boundary
/// hypothesis for `X`.
#[derive(Debug, Clone)]
pub struct DarbouxResult {
    pub m_h: f64,
    pub tilde_c: ScalarField,
    pub spec_ytilde: DiffusionSpec,
    pub kernel_ytilde: TransitionKernel,
    pub notes: Vec<String>,
}

pub fn darboux_transform(kernel_y: &TransitionKernel, seed: &SeedFunction, m_h: f64) -> Result<DarbouxResult> {
    let spec_y = &kernel_y.spec;
    let dom = spec_y.interval;
    for y in dom.probe_grid(101, 1e-3, 8.0) {
        tilde_c(spec_y, seed, m_h, y)?;
    }
    let rate = tilde_c_field(spec_y, seed, m_h);

    let mut notes = Vec::new();
    let probe = DiffusionSpec::killed_bm(
        dom,
        rate.clone(),
        BoundaryCondition::NotApplicable,
        BoundaryCondition::NotApplicable,
    )?;
    let doob = doob_kernel(kernel_y, seed)?;
    let z = dom.reference_point();
    let mut bcs = [BoundaryCondition::NotApplicable; 2];
    for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
        let class = classify_boundary(&probe, side, z)?;
        if class == BoundaryClass::NonSingular {
            bcs[k] = BoundaryCondition::Killing;
        }
        let y_bc = spec_y.bc(side);
        if matches!(y_bc, BoundaryCondition::Reflecting | BoundaryCondition::Elastic(_))
            && class != BoundaryClass::NonSingular
        {
            notes.push(format!(
                "{side:?}: Y is {y_bc} but the transformed end classifies as {class:?}"
            ));
        }
        let x_note = match classify_boundary(&doob.spec, side, z) {
            Ok(BoundaryClass::NonSingular) => match y_bc {
                BoundaryCondition::Reflecting | BoundaryCondition::Elastic(_) => {
                    format!("{side:?}: X non-singular; reflecting because Y is {y_bc} there")
                }
                _ => format!("{side:?}: X non-singular; reflecting condition assumed, not proved"),
            },
            Ok(class) => format!("{side:?}: X boundary is {class:?}; no condition needed"),
            Err(e) => format!("{side:?}: X boundary not classified ({e})"),
        };
        notes.push(x_note);
    }
    let spec_ytilde = DiffusionSpec::killed_bm(dom, rate.clone(), bcs[0], bcs[1])?;
    let ky = kernel_y.clone();
    let s = seed.clone();
    let kernel_ytilde = TransitionKernel::new(spec_ytilde.clone(), Provenance::QuadratureBuilt, move |t, x, y| {
        darboux_density(&ky, &s, m_h, t, x, y).unwrap_or(f64::NAN)
    });
    Ok(DarbouxResult {
        m_h,
        tilde_c: rate,
        spec_ytilde,
        kernel_ytilde,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::special::heat_kernel;
    use crate::math::Interval;

    fn bm_line(rate: f64) -> TransitionKernel {
        let line = Interval::real_line();
        let spec = DiffusionSpec::killed_bm(
            line,
            ScalarField::constant(line, rate),
            BoundaryCondition::NotApplicable,
            BoundaryCondition::NotApplicable,
        )
        .unwrap();
        TransitionKernel::new(spec, Provenance::ClosedForm, move |t, x, y| {
            (-rate * t).exp() * heat_kernel(t, x, y)
        })
    }

    fn cosh_seed(lambda: f64) -> SeedFunction {
        SeedFunction::new(
            ScalarField::new(Interval::real_line(), f64::cosh).with_derivative(f64::sinh),
            lambda,
        )
    }

    fn grid() -> Vec<f64> {
        linspace(-10.0, 10.0, 201)
    }

    #[test]
    fn m_h_for_free_and_killed_bm() {
        let k0 = bm_line(0.0);
        let m0 = compute_m_h(&k0.spec, &cosh_seed(0.5), &grid()).unwrap();
        assert!(m0.value.abs() < 1e-14, "{m0:?}");
        // rate 1: sup of 1 - tanh^2 is 1 at y = 0; an off-centre grid must
        // still find it through refinement
        let k1 = bm_line(1.0);
        let off: Vec<f64> = linspace(-10.03, 9.97, 101);
        let m1 = compute_m_h(&k1.spec, &cosh_seed(-0.5), &off).unwrap();
        assert!((m1.value - 1.0).abs() < 1e-8, "{m1:?}");
        assert!(m1.refinement > 0.0);
    }

    #[test]
    fn m_h_unbounded_is_reported() {
        let line = Interval::real_line();
        let spec = DiffusionSpec::killed_bm(
            line,
            ScalarField::new(line, |y| y * y),
            BoundaryCondition::NotApplicable,
            BoundaryCondition::NotApplicable,
        )
        .unwrap();
        assert!(matches!(
            compute_m_h(&spec, &cosh_seed(0.5), &grid()),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn tilde_c_of_cosh_seed_is_tanh_squared() {
        let k = bm_line(0.0);
        let seed = cosh_seed(0.5);
        for y in [-2.0, 0.0, 0.7] {
            let r = tilde_c(&k.spec, &seed, 0.0, y).unwrap();
            assert!((r - f64::tanh(y).powi(2)).abs() < 1e-15);
        }
        assert!(matches!(
            tilde_c(&k.spec, &seed, -1.0, 0.2),
            Err(Error::NegativeRate { .. })
        ));
        // clamping of round-off sized negatives
        assert_eq!(tilde_c(&k.spec, &seed, -1e-12, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lambda_invariance_of_cosh() {
        let k = bm_line(0.0);
        let r = verify_lambda_invariance(&k, &cosh_seed(0.5), 0.7, 0.3, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
        let tiny = verify_lambda_invariance(&k, &cosh_seed(0.5), 1e-6, 0.3, 1e-6).unwrap();
        assert!(tiny.residual < 1e-9);
        let wrong = verify_lambda_invariance(&k, &cosh_seed(0.4), 1.0, 0.3, 1e-6).unwrap();
        assert!(!wrong.pass);
    }

    #[test]
    fn doob_identity_and_composition() {
        let k = bm_line(0.0);
        let one = SeedFunction::new(ScalarField::constant(Interval::real_line(), 1.0), 0.0);
        assert_eq!(doob_density(&k, &one, 0.8, 0.1, 0.6), k.eval(0.8, 0.1, 0.6));
        let seed = cosh_seed(0.5);
        let v = doob_density(&k, &seed, 0.5, 0.0, 1.0);
        let expect = (-0.25_f64).exp() * heat_kernel(0.5, 0.0, 1.0) * 1.0_f64.cosh();
        assert!((v - expect).abs() < 1e-15);
        let x = doob_kernel(&k, &seed).unwrap();
        assert!((x.mass(1.0, 0.4).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn density_for_trivial_seed_is_the_kernel() {
        // h ≡ 1, λ = 0: the formula reduces to ∂_x ∫_y^∞ p(x,u) du = p(x,y)
        let k = bm_line(0.0);
        let one = SeedFunction::new(ScalarField::constant(Interval::real_line(), 1.0), 0.0);
        for (x, y) in [(0.0, 0.5), (1.0, -0.3)] {
            let v = darboux_density(&k, &one, 0.0, 0.6, x, y).unwrap();
            assert!((v - heat_kernel(0.6, x, y)).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn transform_of_bm_on_the_line() {
        let k = bm_line(0.0);
        let res = darboux_transform(&k, &cosh_seed(0.5), 0.0).unwrap();
        assert_eq!(res.spec_ytilde.left_bc, BoundaryCondition::NotApplicable);
        assert!((res.tilde_c.eval(1.0) - 1.0_f64.tanh().powi(2)).abs() < 1e-15);
        assert_eq!(res.notes.len(), 2);
        let v = res.kernel_ytilde.eval(1.0, 0.5, -0.2);
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn margin_is_enforced_near_finite_ends() {
        let half = Interval::positive_half_line();
        let spec = DiffusionSpec::killed_bm(
            half,
            ScalarField::constant(half, 0.0),
            BoundaryCondition::Killing,
            BoundaryCondition::NotApplicable,
        )
        .unwrap();
        let k = TransitionKernel::new(spec, Provenance::ClosedForm, |t, x, y| {
            heat_kernel(t, x, y) - heat_kernel(t, x, -y)
        });
        let seed = SeedFunction::new(ScalarField::new(half, f64::sinh).with_derivative(f64::cosh), 0.5);
        assert!(matches!(
            darboux_density(&k, &seed, 0.0, 1.0, 1e-5, 0.5),
            Err(Error::DomainMargin { .. })
        ));
    }
}
