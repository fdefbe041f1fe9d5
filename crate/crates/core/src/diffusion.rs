//! Killed one-dimensional diffusions `½σ²∂² + b∂ - c` on an interval:
//! scale, speed and killing densities, Feller's boundary classification and
//! Green's functions built from fundamental solutions.

use std::fmt;

use crate::error::{Error, Result};
use crate::math::{wronskian_num, Interval, Quadrature, ScalarField};

/// Boundary behaviour imposed at a non-singular end point.
///
/// `Elastic(γ)` means `f'(l+) = γ f(l+)` on the left and `f'(r-) = -γ f(r-)`
/// on the right, with derivatives taken in the natural coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Killing,
    Reflecting,
    Elastic(f64),
    NotApplicable,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Killing => write!(f, "killing"),
            BoundaryCondition::Reflecting => write!(f, "reflecting"),
            BoundaryCondition::Elastic(g) => write!(f, "elastic({g})"),
            BoundaryCondition::NotApplicable => write!(f, "n/a"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Feller classification of an end point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    Natural,
    ExitNotEntrance,
    EntranceNotExit,
    NonSingular,
}

impl BoundaryClass {
    fn from_tests(exit: bool, entrance: bool) -> Self {
        match (exit, entrance) {
            (true, true) => BoundaryClass::NonSingular,
            (true, false) => BoundaryClass::ExitNotEntrance,
            (false, true) => BoundaryClass::EntranceNotExit,
            (false, false) => BoundaryClass::Natural,
        }
    }
}

/// Generator `½σ²(x)∂² + b(x)∂ - c(x)` on `interval` with boundary conditions.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    pub interval: Interval,
    pub drift: ScalarField,
    pub sigma: ScalarField,
    pub killing: ScalarField,
    pub left_bc: BoundaryCondition,
    pub right_bc: BoundaryCondition,
    /// Constant `N` in `s' = e^{-B}/N`, `m' = 2N e^{B}/σ²`.
    pub speed_normalization: f64,
    /// Optional closed form of `B` (with `B' = 2b/σ²`), anchored anywhere.
    scale_exponent: Option<ScalarField>,
}

impl DiffusionSpec {
    pub fn new(
        interval: Interval,
        drift: ScalarField,
        sigma: ScalarField,
        killing: ScalarField,
        left_bc: BoundaryCondition,
        right_bc: BoundaryCondition,
        speed_normalization: f64,
    ) -> Result<Self> {
        if !(speed_normalization > 0.0) {
            return Err(Error::InvalidSpec("speed normalization must be positive".into()));
        }
        for (side, bc, end) in [("left", left_bc, interval.left), ("right", right_bc, interval.right)] {
            if let BoundaryCondition::Elastic(g) = bc {
                if !(g > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "{side} elastic parameter must be positive, got {g}"
                    )));
                }
            }
            if end.is_infinite() && bc != BoundaryCondition::NotApplicable {
                return Err(Error::InvalidSpec(format!(
                    "{side} boundary is infinite; no boundary condition can be imposed"
                )));
            }
        }
        for x in interval.probe_grid(41, 1e-3, 8.0) {
            let c = killing.eval(x);
            let s = sigma.eval(x);
            if !(c >= 0.0) {
                return Err(Error::InvalidSpec(format!("killing rate {c} < 0 at {x}")));
            }
            if !(s > 0.0) {
                return Err(Error::InvalidSpec(format!("sigma {s} <= 0 at {x}")));
            }
        }
        Ok(Self {
            interval,
            drift,
            sigma,
            killing,
            left_bc,
            right_bc,
            speed_normalization,
            scale_exponent: None,
        })
    }

    /// Brownian motion killed at rate `c`, normalized so that `m' ≡ 1`
    /// and `s' ≡ 2`.
    pub fn killed_bm(
        interval: Interval,
        killing: ScalarField,
        left_bc: BoundaryCondition,
        right_bc: BoundaryCondition,
    ) -> Result<Self> {
        Self::new(
            interval,
            ScalarField::constant(interval, 0.0),
            ScalarField::constant(interval, 1.0),
            killing,
            left_bc,
            right_bc,
            0.5,
        )
    }

    /// Supplies `B` in closed form instead of integrating `2b/σ²`.
    pub fn with_scale_exponent(mut self, b: ScalarField) -> Self {
        self.scale_exponent = Some(b);
        self
    }

    pub fn is_killed_bm(&self) -> bool {
        self.drift.constant_value() == Some(0.0) && self.sigma.constant_value() == Some(1.0)
    }

    pub fn bc(&self, side: Side) -> BoundaryCondition {
        match side {
            Side::Left => self.left_bc,
            Side::Right => self.right_bc,
        }
    }

    pub fn end(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.interval.left,
            Side::Right => self.interval.right,
        }
    }

    /// `B(x)` with `B(reference point) = 0`.
    pub fn scale_exponent(&self, x: f64) -> Result<f64> {
        let z = self.interval.reference_point();
        if self.drift.constant_value() == Some(0.0) {
            return Ok(0.0);
        }
        if let Some(b) = &self.scale_exponent {
            return Ok(b.eval(x) - b.eval(z));
        }
        let drift = self.drift.clone();
        let sigma = self.sigma.clone();
        Quadrature::with_tol(1e-12)
            .integrate(
                move |u| {
                    let s = sigma.eval(u);
                    2.0 * drift.eval(u) / (s * s)
                },
                z,
                x,
            )
            .map(|r| r.value)
            .map_err(|e| Error::QuadratureFailure(format!("B({x}): {e}")))
    }

    /// Checks that conditions are imposed exactly at the non-singular ends.
    pub fn validate_boundaries(&self) -> Result<()> {
        let z = self.interval.reference_point();
        for side in [Side::Left, Side::Right] {
            let class = classify_boundary(self, side, z)?;
            let bc = self.bc(side);
            let imposed = bc != BoundaryCondition::NotApplicable;
            if imposed != (class == BoundaryClass::NonSingular) {
                return Err(Error::InvalidSpec(format!(
                    "{side:?} boundary is {class:?} but carries condition {bc}"
                )));
            }
        }
        Ok(())
    }

    /// Local generator applied to a function with known first and second
    /// derivatives.
    pub fn generator(&self, x: f64, f: f64, df: f64, d2f: f64) -> f64 {
        let s = self.sigma.eval(x);
        0.5 * s * s * d2f + self.drift.eval(x) * df - self.killing.eval(x) * f
    }
}

/// Densities of the scale function, speed measure and killing measure.
#[derive(Debug, Clone)]
pub struct ScaleSpeedKilling {
    pub s_prime: ScalarField,
    pub m_prime: ScalarField,
    pub k_prime: ScalarField,
}

/// `s' = e^{-B}/N`, `m' = 2N σ^{-2} e^{B}`, `k' = c m'`.
pub fn scale_speed_killing(spec: &DiffusionSpec) -> Result<ScaleSpeedKilling> {
    // Surface quadrature problems now rather than as NaN later.
    let probe = spec.interval.reference_point() + 0.25;
    if spec.interval.contains(probe) {
        spec.scale_exponent(probe)?;
    }
    let n = spec.speed_normalization;
    let dom = spec.interval;
    let sp = spec.clone();
    let s_prime = ScalarField::new(dom, move |x| match sp.scale_exponent(x) {
        Ok(b) => (-b).exp() / n,
        Err(_) => f64::NAN,
    });
    let sp = spec.clone();
    let m_prime = ScalarField::new(dom, move |x| {
        let s = sp.sigma.eval(x);
        match sp.scale_exponent(x) {
            Ok(b) => 2.0 * n * b.exp() / (s * s),
            Err(_) => f64::NAN,
        }
    });
    let sp = spec.clone();
    let mp = m_prime.clone();
    let k_prime = ScalarField::new(dom, move |x| sp.killing.eval(x) * mp.eval(x));
    Ok(ScaleSpeedKilling {
        s_prime,
        m_prime,
        k_prime,
    })
}

/// Number of window extensions used by the L1 divergence test.
const WINDOW_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum L1 {
    Finite,
    Infinite,
}

/// Decides whether `∫ g` over `(end, z)` (or `(z, end)`) is finite by
/// integrating over nested windows that approach `end` geometrically: by
/// halving the distance for a finite end, by doubling the reach for an
/// infinite one. `g` receives the window `(a, b)` and returns `∫_a^b |..|`.
fn l1_test(end: f64, z: f64, mut piece: impl FnMut(f64, f64) -> Result<f64>) -> Result<L1> {
    let dir = if end < z { -1.0 } else { 1.0 };
    let window = |k: usize| -> f64 {
        if end.is_finite() {
            end + (z - end) * 0.5_f64.powi(k as i32)
        } else {
            z + dir * 2.0_f64.powi(k as i32)
        }
    };
    let mut total = 0.0;
    let mut increments = Vec::with_capacity(WINDOW_STEPS);
    let mut inner = z;
    for k in 1..=WINDOW_STEPS {
        let outer = window(k);
        let (a, b) = if outer < inner { (outer, inner) } else { (inner, outer) };
        let inc = piece(a, b)?.abs();
        if !inc.is_finite() {
            return Ok(L1::Infinite);
        }
        total += inc;
        increments.push(inc);
        inner = outer;
    }
    let last = *increments.last().unwrap();
    if last <= 1e-13 * total || total == 0.0 {
        return Ok(L1::Finite);
    }
    let ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY })
        .collect();
    let tail = &ratios[ratios.len() - 4..];
    if tail.iter().all(|&r| r <= 0.85) {
        Ok(L1::Finite)
    } else if tail.iter().all(|&r| r >= 0.95) {
        Ok(L1::Infinite)
    } else {
        Err(Error::Inconclusive(format!(
            "window increments {increments:?} neither decay nor persist"
        )))
    }
}

/// Feller classification of one end point, using the reference point `z`.
pub fn classify_boundary(spec: &DiffusionSpec, side: Side, z: f64) -> Result<BoundaryClass> {
    if !spec.interval.contains(z) {
        return Err(Error::InvalidSpec(format!("probe point {z} outside the interval")));
    }
    let end = spec.end(side);
    let q = Quadrature::with_tol(1e-9);
    let integrate = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> Result<f64> {
        // An integrand that overflows inside a window is treated as divergent.
        match q.integrate(f, a, b) {
            Ok(r) => Ok(r.value),
            Err(Error::NonFiniteIntegrand { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(Error::QuadratureFailure(e.to_string())),
        }
    };

    if spec.is_killed_bm() {
        if end.is_infinite() {
            return Ok(BoundaryClass::Natural);
        }
        let c = &spec.killing;
        let exit = l1_test(end, z, |a, b| integrate(&|y| c.eval(y) * (y - end).abs(), a, b))?;
        let entrance = l1_test(end, z, |a, b| integrate(&|y| c.eval(y), a, b))?;
        return Ok(BoundaryClass::from_tests(exit == L1::Finite, entrance == L1::Finite));
    }

    let ssk = scale_speed_killing(spec)?;
    let total_speed = |u: f64| ssk.m_prime.eval(u) + ssk.k_prime.eval(u);

    // R(x) = |M(z) - M(x)| s'(x) with M' = m' + k'; Q(x) = |s(z) - s(x)| M'(x).
    // The inner integrals from x to z are accumulated window by window.
    let mut speed_to_z = 0.0;
    let exit = l1_test(end, z, |a, b| {
        let near = if end < z { b } else { a };
        let base = speed_to_z;
        let val = integrate(
            &|x| {
                let inner = integrate(&total_speed, x, near).unwrap_or(f64::NAN);
                (base + inner.abs()) * ssk.s_prime.eval(x)
            },
            a,
            b,
        )?;
        speed_to_z += integrate(&total_speed, a, b)?.abs();
        Ok(val)
    })?;
    let mut scale_to_z = 0.0;
    let entrance = l1_test(end, z, |a, b| {
        let near = if end < z { b } else { a };
        let base = scale_to_z;
        let val = integrate(
            &|x| {
                let inner = integrate(&|u| ssk.s_prime.eval(u), x, near).unwrap_or(f64::NAN);
                (base + inner.abs()) * total_speed(x)
            },
            a,
            b,
        )?;
        scale_to_z += integrate(&|u| ssk.s_prime.eval(u), a, b)?.abs();
        Ok(val)
    })?;
    Ok(BoundaryClass::from_tests(exit == L1::Finite, entrance == L1::Finite))
}

/// Increasing/decreasing positive solutions of `L f = μ f` and their
/// Wronskian constant `ω = Wr[φ, ψ] / s'`.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    pub psi: ScalarField,
    pub phi: ScalarField,
    pub omega: f64,
    pub mu: f64,
}

impl FundamentalPair {
    /// Builds the pair, evaluating `ω` at the interval's reference point.
    pub fn new(psi: ScalarField, phi: ScalarField, mu: f64, s_prime: &ScalarField) -> Result<Self> {
        let z = psi.domain().reference_point();
        let omega = wronskian_num(&phi, &psi, z)? / s_prime.eval(z);
        Ok(Self { psi, phi, omega, mu })
    }

    /// Relative spread of `Wr[φ, ψ](x) / s'(x)` over `grid`.
    pub fn omega_variation(&self, s_prime: &ScalarField, grid: &[f64]) -> Result<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in grid {
            let w = wronskian_num(&self.phi, &self.psi, x)? / s_prime.eval(x);
            lo = lo.min(w);
            hi = hi.max(w);
        }
        Ok((hi - lo) / self.omega.abs())
    }

    /// True when `ψ` increases, `φ` decreases and both are positive on `grid`.
    pub fn is_monotone_positive(&self, grid: &[f64]) -> bool {
        grid.windows(2).all(|w| {
            let (a, b) = (w[0], w[1]);
            self.psi.eval(a) > 0.0
                && self.phi.eval(b) > 0.0
                && self.psi.eval(b) > self.psi.eval(a)
                && self.phi.eval(b) < self.phi.eval(a)
        })
    }
}

/// Green's function (density with respect to the speed measure)
/// `ω⁻¹ ψ(min(x,y)) φ(max(x,y))`.
pub fn greens_from_fundamental(pair: &FundamentalPair, x: f64, y: f64) -> Result<f64> {
    if pair.omega.abs() < 1e-12 {
        return Err(Error::DegenerateWronskian(pair.omega));
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    Ok(pair.psi.eval(lo) * pair.phi.eval(hi) / pair.omega)
}
