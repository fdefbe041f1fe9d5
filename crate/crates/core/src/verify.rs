//! Named groups of numerical checks with their default grids and
//! tolerances. Each check records the measured quantity, the tolerance and
//! whether it passed, so a failing run says exactly what missed and by how
//! much.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{
    appendix_a_check, e4_f, lemma51_check, qn_poly, AppendixIdentity, ExampleId, ExampleModel, Lemma51Form,
};
use crate::darboux::{
    darboux_density, doob_kernel, factorization_residuals, intertwine_residual, inverse_doob_kernel, krein_dual_check,
    siegmund_identity_check, verify_lambda_invariance, SeedFunction,
};
use crate::diffusion::{BoundaryCondition, DiffusionSpec};
use crate::error::{Error, Result};
use crate::kernel::{Provenance, TransitionKernel};
use crate::math::special::heat_kernel;
use crate::math::{linspace, Interval, Quadrature, ScalarField};
use crate::montecarlo::{corollary52_check, excessive_check, mc_density_error, simulate_paths, xtilde_spec, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariance,
    Theorem48,
    Duality,
    Intertwine,
    Spectral,
    Lemma51,
    AppendixA,
    Mc,
    Excessive,
    Corollary52,
    Negativity,
    Hygiene,
    Krein,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Invariance,
        Suite::Theorem48,
        Suite::Duality,
        Suite::Intertwine,
        Suite::Spectral,
        Suite::Lemma51,
        Suite::AppendixA,
        Suite::Mc,
        Suite::Excessive,
        Suite::Corollary52,
        Suite::Negativity,
        Suite::Hygiene,
        Suite::Krein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Theorem48 => "theorem48",
            Suite::Duality => "duality",
            Suite::Intertwine => "intertwine",
            Suite::Spectral => "spectral",
            Suite::Lemma51 => "lemma51",
            Suite::AppendixA => "appendixA",
            Suite::Mc => "mc",
            Suite::Excessive => "excessive",
            Suite::Corollary52 => "corollary52",
            Suite::Negativity => "negativity",
            Suite::Hygiene => "hygiene",
            Suite::Krein => "krein",
        }
    }

    /// Examples a suite runs over when none is requested.
    pub fn default_examples(self) -> Vec<ExampleId> {
        match self {
            Suite::Invariance | Suite::Theorem48 | Suite::Intertwine | Suite::Hygiene => ExampleId::all(),
            Suite::Duality => vec![ExampleId::E1, ExampleId::E4],
            Suite::Spectral => vec![ExampleId::E1, ExampleId::E4, ExampleId::E5],
            Suite::Mc | Suite::Excessive | Suite::Krein => vec![ExampleId::E1, ExampleId::E2],
            Suite::Lemma51 => vec![ExampleId::E4],
            Suite::AppendixA | Suite::Corollary52 | Suite::Negativity => vec![],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a measured value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// `value ≤ tol`
    AtMost,
    /// `value > tol`, for quantities that must be visibly nonzero.
    Exceeds,
    /// `value < 0`
    Negative,
    /// `value ≥ 0`
    NonNegative,
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expect::AtMost => "<=",
            Expect::Exceeds => ">",
            Expect::Negative => "<0",
            Expect::NonNegative => ">=0",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub expect: Expect,
    pub pass: bool,
    /// Error text when the check could not be evaluated.
    pub error: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64, expect: Expect) -> Self {
        let pass = match expect {
            Expect::AtMost => value <= tol,
            Expect::Exceeds => value > tol,
            Expect::Negative => value < 0.0,
            Expect::NonNegative => value >= 0.0,
        };
        Self {
            name: name.into(),
            value,
            tol,
            expect,
            pass,
            error: None,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::new(name, value, tol, Expect::AtMost)
    }

    fn from_result(name: impl Into<String>, r: Result<f64>, tol: f64, expect: Expect) -> Self {
        match r {
            Ok(v) => Self::new(name, v, tol, expect),
            Err(e) => Self {
                name: name.into(),
                value: f64::NAN,
                tol,
                expect,
                pass: false,
                error: Some(e.to_string()),
            },
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status}  {:<48} {:>12.4e} {} {:e}",
            self.name, self.value, self.expect, self.tol
        )?;
        if let Some(e) = &self.error {
            write!(f, "  ({e})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Overrides the suite's default examples when nonempty.
    pub examples: Vec<ExampleId>,
    /// Overrides the main tolerance of the suite.
    pub tol: Option<f64>,
    pub sim: SimConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            examples: Vec::new(),
            tol: None,
            sim: SimConfig {
                dt: 1e-3,
                n_paths: 100_000,
                seed: 42,
            },
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let examples = if opts.examples.is_empty() {
        suite.default_examples()
    } else {
        opts.examples.clone()
    };
    let tol = |default: f64| opts.tol.unwrap_or(default);
    let mut out = Vec::new();
    match suite {
        Suite::Invariance => {
            for id in examples {
                out.extend(invariance(id, tol(1e-6))?);
            }
            if opts.examples.is_empty() {
                out.push(linear_seed_non_invariance());
            }
        }
        Suite::Theorem48 => {
            for id in examples {
                out.push(theorem48(id, tol(1e-5))?);
            }
        }
        Suite::Duality => {
            for id in examples {
                out.push(duality(id, tol(1e-6))?);
            }
        }
        Suite::Intertwine => {
            for id in examples {
                out.extend(intertwine(id, tol(1e-6))?);
            }
        }
        Suite::Spectral => {
            for id in examples {
                out.push(spectral(id, tol(1e-6))?);
            }
            if opts.examples.is_empty() {
                out.extend(orthogonality());
            }
        }
        Suite::Lemma51 => {
            for id in examples {
                if id != ExampleId::E4 {
                    return Err(Error::Unsupported(format!(
                        "lemma51 suite has eigenfunction pairs only for e4, not {id}"
                    )));
                }
                out.extend(lemma51(tol(1e-7)));
            }
        }
        Suite::AppendixA => out.extend(appendix_a(tol(1e-8))),
        Suite::Mc => {
            for id in examples {
                out.push(mc_histogram(id, 0.5, 4.0, &opts.sim)?);
            }
        }
        Suite::Excessive => {
            for id in examples {
                out.push(excessive(id, &opts.sim)?);
            }
        }
        Suite::Corollary52 => out.extend(corollary52(tol(3.0), &opts.sim)),
        Suite::Negativity => out.push(negativity()),
        Suite::Hygiene => {
            for id in examples {
                out.extend(hygiene(id)?);
            }
        }
        Suite::Krein => {
            for id in examples {
                out.push(krein(id, tol(1e-8))?);
            }
        }
    }
    Ok(out)
}

/// Four interior sample points of the example's state space.
pub fn sample_points(id: ExampleId) -> [f64; 4] {
    match id {
        ExampleId::E1 => [-1.5, -0.5, 0.5, 1.5],
        ExampleId::E2 | ExampleId::E3 { .. } => [0.3, 0.8, 1.5, 2.5],
        ExampleId::E4 => [0.2, 0.4, 0.6, 0.8],
        ExampleId::E5 => [-1.0, -0.3, 0.4, 1.1],
    }
}

fn model(id: ExampleId) -> Result<ExampleModel> {
    ExampleModel::new(id)
}

pub fn invariance(id: ExampleId, tol: f64) -> Result<Vec<Check>> {
    let m = model(id)?;
    let p = sample_points(id);
    let mut out = Vec::new();
    for t in [0.5, 1.0] {
        for x in [p[1], p[2]] {
            let r = verify_lambda_invariance(&m.p_y, &m.seed, t, x, tol).map(|c| c.residual);
            out.push(Check::from_result(
                format!("invariance {id} t={t} x={x}"),
                r,
                tol,
                Expect::AtMost,
            ));
        }
    }
    Ok(out)
}

fn reflected_bm() -> TransitionKernel {
    let half = Interval::positive_half_line();
    let spec = DiffusionSpec::killed_bm(
        half,
        ScalarField::constant(half, 0.0),
        BoundaryCondition::Reflecting,
        BoundaryCondition::NotApplicable,
    )
    .expect("reflected Brownian motion is a valid spec");
    TransitionKernel::new(spec, Provenance::ClosedForm, |t, x, y| {
        heat_kernel(t, x, y) + heat_kernel(t, x, -y)
    })
}

fn linear_seed() -> SeedFunction {
    SeedFunction::new(
        ScalarField::new(Interval::positive_half_line(), |y| y).with_derivative(|_| 1.0),
        0.0,
    )
}

/// `h(y) = y` is harmonic for reflected Brownian motion away from zero but
/// not invariant for its semigroup; the residual must be large.
pub fn linear_seed_non_invariance() -> Check {
    let r = verify_lambda_invariance(&reflected_bm(), &linear_seed(), 1.0, 1.0, 1e-6).map(|c| c.residual);
    Check::from_result("non-invariance of h(y)=y under reflection", r, 1e-2, Expect::Exceeds)
}

/// Density built from the linear seed at `(t, x, y) = (1, 1, 0.05)`, which
/// must come out negative.
pub fn negativity() -> Check {
    let r = darboux_density(&reflected_bm(), &linear_seed(), 0.0, 1.0, 1.0, 0.05);
    Check::from_result("negative density from h(y)=y at (1, 1, 0.05)", r, 0.0, Expect::Negative)
}

/// Sup over a 4×4 grid at `t ∈ {0.3, 1}` of the gap between the general
/// density formula and the closed form.
pub fn theorem48(id: ExampleId, tol: f64) -> Result<Check> {
    let m = model(id)?;
    let pts = sample_points(id);
    let mut worst = 0.0_f64;
    for t in [0.3, 1.0] {
        for &x in &pts {
            for &y in &pts {
                let built = match darboux_density(&m.p_y, &m.seed, m.m_h, t, x, y) {
                    Ok(v) => v,
                    Err(e) => {
                        return Ok(Check::from_result(
                            format!("density formula {id}"),
                            Err(e),
                            tol,
                            Expect::AtMost,
                        ))
                    }
                };
                worst = worst.max((built - m.pytilde_eval(t, x, y)).abs());
            }
        }
    }
    Ok(Check::at_most(
        format!("density formula vs closed form {id}"),
        worst,
        tol,
    ))
}

pub fn duality(id: ExampleId, tol: f64) -> Result<Check> {
    let m = model(id)?;
    let x = doob_kernel(&m.p_y, &m.seed)?;
    let xt = inverse_doob_kernel(&m.p_ytilde, &m.seed, m.m_h)?;
    let (y, grid) = match id {
        ExampleId::E1 => (0.3, linspace(-2.0, 2.0, 9)),
        ExampleId::E4 => (0.4, linspace(0.1, 0.9, 9)),
        ExampleId::E5 => (0.3, linspace(-1.5, 1.5, 9)),
        _ => (1.0, linspace(0.2, 2.6, 9)),
    };
    let r = siegmund_identity_check(&x, &xt, 0.5, y, &grid);
    Ok(Check::from_result(
        format!("dual constancy {id} t=0.5 y={y}"),
        r,
        tol,
        Expect::AtMost,
    ))
}

pub fn intertwine(id: ExampleId, tol: f64) -> Result<Vec<Check>> {
    let m = model(id)?;
    let dom = m.spec_y.interval;
    let pts = sample_points(id);
    let mut out = Vec::new();
    let f = ScalarField::new(dom, |y: f64| (1.3 * y).sin() + y * y)
        .with_derivative(|y: f64| 1.3 * (1.3 * y).cos() + 2.0 * y);
    let g = ScalarField::new(dom, |y: f64| (-0.5 * y * y).exp()).with_derivative(|y: f64| -y * (-0.5 * y * y).exp());
    let mut worst = 0.0_f64;
    for &x in &pts[..3] {
        match factorization_residuals(&m.spec_y, &m.seed, m.m_h, &f, &g, x) {
            Ok(r) => worst = worst.max(r.first).max(r.second),
            Err(e) => {
                out.push(Check::from_result(
                    format!("factorization {id}"),
                    Err(e),
                    tol,
                    Expect::AtMost,
                ));
                return Ok(out);
            }
        }
    }
    out.push(Check::at_most(format!("factorization {id}"), worst, tol));

    let eigen = match id {
        ExampleId::E1 => {
            let mu = 0.7_f64;
            let z = (2.0 * (1.0 + mu)).sqrt();
            Some((
                ScalarField::new(dom, move |y| (z * y).exp()).with_derivative(move |y| z * (z * y).exp()),
                mu,
            ))
        }
        ExampleId::E4 => Some((
            ScalarField::new(dom, |x: f64| (3.0 * PI * x).sin())
                .with_derivative(|x: f64| 3.0 * PI * (3.0 * PI * x).cos()),
            -3.5 * PI * PI,
        )),
        _ => None,
    };
    if let Some((ef, mu)) = eigen {
        let mut worst = 0.0_f64;
        for &x in &pts[..3] {
            match intertwine_residual(&m.spec_y, &m.seed, m.m_h, &ef, mu, x) {
                Ok(r) => worst = worst.max(r),
                Err(e) => {
                    out.push(Check::from_result(
                        format!("intertwining {id}"),
                        Err(e),
                        tol,
                        Expect::AtMost,
                    ));
                    return Ok(out);
                }
            }
        }
        out.push(Check::at_most(format!("intertwining {id}"), worst, tol));
    }
    Ok(out)
}

/// Eigenfunction expansion against an independent evaluation: the closed
/// form on the line and for the quadratic rate, the general density formula
/// on the unit interval.
pub fn spectral(id: ExampleId, tol: f64) -> Result<Check> {
    let m = model(id)?;
    let pts: Vec<(f64, f64, f64)> = match id {
        ExampleId::E1 => {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..5)
                .map(|_| {
                    (
                        rng.random_range(0.2..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                    )
                })
                .collect()
        }
        ExampleId::E5 => vec![(0.5, -0.3, 0.4), (1.0, 0.2, 1.1), (2.0, -1.0, 0.5)],
        _ => {
            let p = sample_points(id);
            vec![(0.3, p[0], p[2]), (0.5, p[1], p[1]), (1.0, p[2], p[3])]
        }
    };
    let mut worst = 0.0_f64;
    for (t, x, y) in pts {
        let series = m.spectral_eval(t, x, y, 1e-9);
        let reference = if id == ExampleId::E4 {
            darboux_density(&m.p_y, &m.seed, m.m_h, t, x, y)
        } else {
            Ok(m.pytilde_eval(t, x, y))
        };
        match series.and_then(|s| reference.map(|r| (s - r).abs())) {
            Ok(d) => worst = worst.max(d),
            Err(e) => {
                return Ok(Check::from_result(
                    format!("spectral {id}"),
                    Err(e),
                    tol,
                    Expect::AtMost,
                ))
            }
        }
    }
    Ok(Check::at_most(format!("spectral expansion {id}"), worst, tol))
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    Ok(Quadrature::with_tol(1e-13).integrate(f, a, b)?.value)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Orthogonality of the transformed sine modes and the norms of the
/// transformed Hermite polynomials.
pub fn orthogonality() -> Vec<Check> {
    let mut worst = Ok(0.0_f64);
    'outer: for n in 2..=8 {
        for k in n..=8 {
            let expect = if n == k { 0.5 * ((n * n) as f64 - 1.0) } else { 0.0 };
            match integrate(|x| e4_f(n, x) * e4_f(k, x), 0.0, 1.0) {
                Ok(v) => worst = worst.map(|w| w.max((v - expect).abs())),
                Err(e) => {
                    worst = Err(e);
                    break 'outer;
                }
            }
        }
    }
    let nu = |y: f64| (-y * y).exp() / (2.0 * y * y + 1.0).powi(2);
    let norms = (0..=6).try_fold(0.0_f64, |w, n| {
        let v = integrate(|y| qn_poly(n, y).powi(2) * nu(y), -40.0, 40.0)?;
        let expect = PI.sqrt() * 2f64.powi(n as i32 + 1) * factorial(n) * (n as f64 + 3.0);
        Ok(w.max((v / expect - 1.0).abs()))
    });
    let total = integrate(nu, -40.0, 40.0).map(|v| (v - PI.sqrt() / 2.0).abs());
    vec![
        Check::from_result("sine modes orthogonal, n,m <= 8", worst, 1e-8, Expect::AtMost),
        Check::from_result("Hermite norms relative, n <= 6", norms, 1e-8, Expect::AtMost),
        Check::from_result("total mass of nu", total, 1e-10, Expect::AtMost),
    ]
}

pub fn lemma51(tol: f64) -> Vec<Check> {
    let m = match model(ExampleId::E4) {
        Ok(m) => m,
        Err(e) => return vec![Check::from_result("lemma51", Err(e), tol, Expect::AtMost)],
    };
    let unit = Interval::unit();
    let f =
        ScalarField::new(unit, |x: f64| (3.0 * PI * x).sin()).with_derivative(|x: f64| 3.0 * PI * (3.0 * PI * x).cos());
    let g = ScalarField::new(unit, |x: f64| (3.0 * PI * x).cos())
        .with_derivative(|x: f64| -3.0 * PI * (3.0 * PI * x).sin());
    let mu = -4.5 * PI * PI;
    let grid = linspace(0.05, 0.95, 19);
    [Lemma51Form::Wronskian, Lemma51Form::Antiderivative]
        .into_iter()
        .map(|form| {
            let r = lemma51_check(&m.spec_y, &m.seed, &f, &g, mu, &grid, form);
            Check::from_result(format!("product identity e4 ({form:?})"), r, tol, Expect::AtMost)
        })
        .collect()
}

pub fn appendix_a(tol: f64) -> Vec<Check> {
    [
        (AppendixIdentity::A1, 1.0, 0.0),
        (AppendixIdentity::A1, 0.5, 1.2),
        (AppendixIdentity::A2, 0.5, 1.2),
        (AppendixIdentity::A2, 2.0, -0.7),
        (AppendixIdentity::A3, 0.5, 1.2),
        (AppendixIdentity::A3, 1.3, 0.0),
    ]
    .into_iter()
    .map(|(id, t, w)| {
        Check::from_result(
            format!("Fourier identity {id} t={t} w={w}"),
            appendix_a_check(id, t, w),
            tol,
            Expect::AtMost,
        )
    })
    .collect()
}

/// Default starting point and histogram edges for simulating the
/// transformed process: twenty bins spanning `x0 ± 2.5 sqrt(t)`.
pub fn default_bins(id: ExampleId, t: f64) -> (f64, Vec<f64>) {
    let x0 = match id {
        ExampleId::E1 => 0.3,
        ExampleId::E2 | ExampleId::E3 { .. } => 1.0,
        ExampleId::E4 => 0.5,
        ExampleId::E5 => 0.0,
    };
    let dom = match id {
        ExampleId::E1 | ExampleId::E5 => Interval::real_line(),
        ExampleId::E4 => Interval::unit(),
        _ => Interval::positive_half_line(),
    };
    let spread = 2.5 * t.sqrt();
    let lo = (x0 - spread).max(dom.left + 0.02);
    let hi = (x0 + spread).min(dom.right - 0.02);
    (x0, linspace(lo, hi, 21))
}

pub fn mc_histogram(id: ExampleId, t: f64, z_tol: f64, cfg: &SimConfig) -> Result<Check> {
    let m = model(id)?;
    let (x0, edges) = default_bins(id, t);
    let r = simulate_paths(&m.p_ytilde.spec, x0, t, cfg)
        .and_then(|out| mc_density_error(&out, &m.p_ytilde, t, x0, &edges))
        .map(|c| c.max_abs_z);
    Ok(Check::from_result(
        format!("histogram {id} t={t} max|z|"),
        r,
        z_tol,
        Expect::AtMost,
    ))
}

/// Upper confidence bound of `E_x[h(X̃_t)]` relative to `e^{(m_h+λ)t} h(x)`;
/// passes when at most `1.01`.
pub fn excessive(id: ExampleId, cfg: &SimConfig) -> Result<Check> {
    let m = model(id)?;
    let x0 = sample_points(id)[2];
    let t = 1.0;
    let spec = xtilde_spec(&m.seed, m.p_ytilde.spec.left_bc, m.p_ytilde.spec.right_bc)?;
    let r = excessive_check(&m.seed, m.m_h, &spec, x0, t, cfg).map(|r| r.upper_ci / r.bound);
    Ok(Check::from_result(
        format!("excessive {id} x={x0} t={t} (ratio)"),
        r,
        1.01,
        Expect::AtMost,
    ))
}

pub fn corollary52(z_tol: f64, cfg: &SimConfig) -> Vec<Check> {
    [(0.5, 0.5, 1.0, 1.5), (3.0, 0.4, 1.2, 2.0)]
        .into_iter()
        .map(|(gamma, t, x, y)| {
            let r = corollary52_check(gamma, t, x, y, cfg).map(|r| r.z_score.abs());
            Check::from_result(
                format!("killed-BM identity gamma={gamma} |z|"),
                r,
                z_tol,
                Expect::AtMost,
            )
        })
        .collect()
}

/// Symmetry, mass and semigroup checks on the transformed kernel, plus
/// vanishing at zero for the elastic example.
pub fn hygiene(id: ExampleId) -> Result<Vec<Check>> {
    let m = model(id)?;
    let k = &m.p_ytilde;
    let pts = sample_points(id);
    let mut sym = 0.0_f64;
    for t in [0.3, 1.0] {
        for &x in &pts {
            for &y in &pts {
                sym = sym.max((k.eval(t, x, y) - k.eval(t, y, x)).abs());
            }
        }
    }
    let mut out = vec![Check::at_most(format!("symmetry {id}"), sym, 1e-5)];
    // The kernel built from the general formula is not symmetric by
    // construction, so this is the informative half.
    let built_sym = pts
        .iter()
        .enumerate()
        .flat_map(|(i, &x)| pts[i + 1..].iter().map(move |&y| (x, y)))
        .try_fold(0.0_f64, |w, (x, y)| {
            let a = darboux_density(&m.p_y, &m.seed, m.m_h, 0.5, x, y)?;
            let b = darboux_density(&m.p_y, &m.seed, m.m_h, 0.5, y, x)?;
            Ok::<_, Error>(w.max((a - b).abs()))
        });
    out.push(Check::from_result(
        format!("symmetry of built density {id}"),
        built_sym,
        1e-5,
        Expect::AtMost,
    ));
    let masses: Result<Vec<f64>> = [0.5, 1.0]
        .iter()
        .flat_map(|&t| pts.iter().map(move |&x| (t, x)))
        .map(|(t, x)| k.mass(t, x))
        .collect();
    match masses {
        Ok(ms) => {
            let hi = ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = ms.iter().cloned().fold(f64::INFINITY, f64::min);
            out.push(Check::at_most(format!("mass excess over one {id}"), hi - 1.0, 1e-6));
            out.push(Check::new(format!("minimum mass {id}"), lo, 0.0, Expect::NonNegative));
        }
        Err(e) => out.push(Check::from_result(format!("mass {id}"), Err(e), 1e-6, Expect::AtMost)),
    }
    let ck = [(pts[1], pts[2]), (pts[2], pts[2])]
        .into_iter()
        .try_fold(0.0_f64, |w, (x, y)| {
            Ok::<_, Error>(w.max(k.chapman_kolmogorov_residual(0.3, 0.4, x, y)?))
        });
    out.push(Check::from_result(
        format!("semigroup s=0.3 t=0.4 {id}"),
        ck,
        1e-4,
        Expect::AtMost,
    ));
    if let ExampleId::E3 { .. } = id {
        out.push(Check::at_most(
            format!("vanishing at zero {id}"),
            k.eval(0.5, 0.8, 1e-8).abs(),
            1e-6,
        ));
    }
    Ok(out)
}

pub fn krein(id: ExampleId, tol: f64) -> Result<Check> {
    let m = model(id)?;
    let grid = match id {
        ExampleId::E1 => linspace(-2.0, 2.0, 9),
        ExampleId::E4 => linspace(0.2, 0.8, 9),
        ExampleId::E5 => linspace(-1.5, 1.5, 9),
        _ => linspace(0.1, 3.0, 9),
    };
    Ok(Check::from_result(
        format!("string composition {id}"),
        krein_dual_check(&m.seed, &grid),
        tol,
        Expect::AtMost,
    ))
}
