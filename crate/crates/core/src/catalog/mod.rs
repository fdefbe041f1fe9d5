//! Exactly solvable examples: Brownian motion on the line, killed at 0,
//! elastic at 0, killed at both ends of (0, 1), and killed at rate `y²/2`,
//! each with its seed, closed-form kernels and expansions.

mod checks;
mod kernels;
mod spectral;

use std::f64::consts::PI;
use std::fmt;

pub use checks::{
    appendix_a_check, e4_second_seed, iterated_transform_e4, lemma51_check, qn_poly, AppendixIdentity, Lemma51Form,
    E4_SERIES_FLOOR,
};
pub use kernels::{e4_f, e4_f2, Elastic};
pub use spectral::{BoundState, SpectralForm, SpectralKind};

use crate::darboux::SeedFunction;
use crate::diffusion::{scale_speed_killing, BoundaryCondition, DiffusionSpec, FundamentalPair};
use crate::error::{Error, Result};
use crate::kernel::{Provenance, TransitionKernel};
use crate::math::special::heat_kernel;
use crate::math::{Interval, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleId {
    E1,
    E2,
    E3 { gamma: f64 },
    E4,
    E5,
}

impl ExampleId {
    /// Parses `e1`..`e5`; `e3` needs a positive `gamma`.
    pub fn parse(name: &str, gamma: Option<f64>) -> Result<Self> {
        let id = match name.trim().to_ascii_lowercase().as_str() {
            "e1" => Self::E1,
            "e2" => Self::E2,
            "e3" => {
                let gamma = gamma.ok_or_else(|| Error::Config {
                    line: None,
                    field: "gamma".into(),
                    message: "example e3 requires the elastic parameter gamma".into(),
                })?;
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::Config {
                        line: None,
                        field: "gamma".into(),
                        message: format!("gamma must be positive, got {gamma}"),
                    });
                }
                Self::E3 { gamma }
            }
            "e4" => Self::E4,
            "e5" => Self::E5,
            other => {
                return Err(Error::Config {
                    line: None,
                    field: "example".into(),
                    message: format!("unknown example `{other}` (expected e1..e5)"),
                })
            }
        };
        Ok(id)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::E1 => "e1",
            Self::E2 => "e2",
            Self::E3 { .. } => "e3",
            Self::E4 => "e4",
            Self::E5 => "e5",
        }
    }

    /// The seven configurations used by sweeps: e3 at γ ∈ {0.5, 1, 3}.
    pub fn all() -> Vec<Self> {
        vec![
            Self::E1,
            Self::E2,
            Self::E3 { gamma: 0.5 },
            Self::E3 { gamma: 1.0 },
            Self::E3 { gamma: 3.0 },
            Self::E4,
            Self::E5,
        ]
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::E3 { gamma } => write!(f, "e3(gamma={gamma})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExampleModel {
    pub id: ExampleId,
    pub spec_y: DiffusionSpec,
    pub seed: SeedFunction,
    pub m_h: f64,
    pub p_y: TransitionKernel,
    pub p_ytilde: TransitionKernel,
    pub tilde_c: ScalarField,
    pub spectral: Option<SpectralForm>,
}

type DensityFn = Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

fn field(dom: Interval, f: fn(f64) -> f64, df: fn(f64) -> f64) -> ScalarField {
    ScalarField::new(dom, f).with_derivative(df)
}

impl ExampleModel {
    pub fn new(id: ExampleId) -> Result<Self> {
        let none = BoundaryCondition::NotApplicable;
        let line = Interval::real_line();
        let half = Interval::positive_half_line();
        let unit = Interval::unit();
        let zero = |d| ScalarField::constant(d, 0.0);

        let (spec_y, seed, tilde_c, spectral, py, pyt): (
            DiffusionSpec,
            SeedFunction,
            ScalarField,
            Option<SpectralForm>,
            DensityFn,
            DensityFn,
        ) = match id {
            ExampleId::E1 => (
                DiffusionSpec::killed_bm(line, zero(line), none, none)?,
                SeedFunction::new(field(line, f64::cosh, f64::sinh), 0.5),
                ScalarField::new(line, |y: f64| y.tanh().powi(2)),
                Some(spectral::e1_form()),
                Box::new(heat_kernel),
                Box::new(kernels::e1_ytilde),
            ),
            ExampleId::E2 => (
                DiffusionSpec::killed_bm(half, zero(half), BoundaryCondition::Killing, none)?,
                SeedFunction::new(field(half, f64::sinh, f64::cosh), 0.5),
                ScalarField::new(half, |y: f64| y.tanh().powi(-2)),
                Some(spectral::e2_form()),
                Box::new(kernels::e2_y),
                Box::new(kernels::e2_ytilde),
            ),
            ExampleId::E3 { gamma } => {
                let el = Elastic::new(gamma);
                let h = ScalarField::new(half, move |y| el.h(y)).with_derivative(move |y| el.dh(y));
                let rate = match el.alpha() {
                    None => ScalarField::constant(half, 1.0),
                    Some(a) if el.beta > 0.0 => ScalarField::new(half, move |y: f64| (y + a).tanh().powi(2)),
                    Some(a) => ScalarField::new(half, move |y: f64| (y + a).tanh().powi(-2)),
                };
                (
                    DiffusionSpec::killed_bm(half, zero(half), BoundaryCondition::Elastic(gamma), none)?,
                    SeedFunction::new(h, 0.5),
                    rate,
                    None,
                    Box::new(move |t, x, y| el.y_density(t, x, y)),
                    Box::new(move |t, x, y| el.ytilde_density(t, x, y)),
                )
            }
            ExampleId::E4 => (
                DiffusionSpec::killed_bm(unit, zero(unit), BoundaryCondition::Killing, BoundaryCondition::Killing)?,
                SeedFunction::new(field(unit, |y| (PI * y).sin(), |y| PI * (PI * y).cos()), -0.5 * PI * PI),
                ScalarField::new(unit, |y: f64| (PI / (PI * y).tan()).powi(2)),
                Some(spectral::e4_form()),
                Box::new(kernels::e4_y),
                Box::new(kernels::e4_ytilde),
            ),
            ExampleId::E5 => (
                DiffusionSpec::killed_bm(line, ScalarField::new(line, |y| 0.5 * y * y), none, none)?,
                SeedFunction::new(
                    field(
                        line,
                        |y| (0.5 * y * y).exp() * (2.0 * y * y + 1.0),
                        |y| (0.5 * y * y).exp() * y * (2.0 * y * y + 5.0),
                    ),
                    2.5,
                ),
                ScalarField::new(line, |y: f64| {
                    let q = 2.0 * y * y + 1.0;
                    0.5 * y * y + 8.0 * y * y * (2.0 * y * y + 3.0) / (q * q)
                }),
                Some(spectral::e5_form()),
                Box::new(kernels::e5_y),
                Box::new(kernels::e5_ytilde),
            ),
        };

        // The transformed process kills where the original reflected or was
        // elastic. Where the original killed, h vanishes and c̃ blows up, so
        // that end is singular and takes no condition.
        let flip = |bc| match bc {
            BoundaryCondition::Reflecting | BoundaryCondition::Elastic(_) => BoundaryCondition::Killing,
            _ => none,
        };
        let (tilde_left, tilde_right) = (flip(spec_y.left_bc), flip(spec_y.right_bc));
        let spec_ytilde = DiffusionSpec::killed_bm(spec_y.interval, tilde_c.clone(), tilde_left, tilde_right)?;
        let p_ytilde_prov = if id == ExampleId::E4 {
            Provenance::Spectral
        } else {
            Provenance::ClosedForm
        };
        Ok(Self {
            id,
            p_y: TransitionKernel::new(spec_y.clone(), Provenance::ClosedForm, py),
            p_ytilde: TransitionKernel::new(spec_ytilde, p_ytilde_prov, pyt),
            spec_y,
            seed,
            m_h: 0.0,
            tilde_c,
            spectral,
        })
    }

    pub fn py_eval(&self, t: f64, x: f64, y: f64) -> f64 {
        self.p_y.eval(t, x, y)
    }

    pub fn pytilde_eval(&self, t: f64, x: f64, y: f64) -> f64 {
        self.p_ytilde.eval(t, x, y)
    }

    /// Eigenfunction expansion of the transformed kernel, truncated so the
    /// estimated error is below `tol`.
    pub fn spectral_eval(&self, t: f64, x: f64, y: f64, tol: f64) -> Result<f64> {
        match &self.spectral {
            Some(form) => form.eval(t, x, y, tol),
            None => Err(Error::Unsupported(format!("no spectral expansion for {}", self.id))),
        }
    }

    /// Increasing/decreasing solutions of `L_Y u = μ u` with the boundary
    /// conditions of `Y`, for `μ > 0`.
    pub fn greens_y(&self, mu: f64) -> Result<FundamentalPair> {
        let k = (2.0 * mu).sqrt();
        let dom = self.spec_y.interval;
        let (psi, phi) = match self.id {
            ExampleId::E1 => (
                ScalarField::new(dom, move |y: f64| (k * y).exp()).with_derivative(move |y: f64| k * (k * y).exp()),
                ScalarField::new(dom, move |y: f64| (-k * y).exp()).with_derivative(move |y: f64| -k * (-k * y).exp()),
            ),
            ExampleId::E2 => (
                ScalarField::new(dom, move |y: f64| (k * y).sinh()).with_derivative(move |y: f64| k * (k * y).cosh()),
                ScalarField::new(dom, move |y: f64| (-k * y).exp()).with_derivative(move |y: f64| -k * (-k * y).exp()),
            ),
            ExampleId::E3 { gamma } => (
                ScalarField::new(dom, move |y: f64| k * (k * y).cosh() + gamma * (k * y).sinh())
                    .with_derivative(move |y: f64| k * k * (k * y).sinh() + gamma * k * (k * y).cosh()),
                ScalarField::new(dom, move |y: f64| (-k * y).exp()).with_derivative(move |y: f64| -k * (-k * y).exp()),
            ),
            ExampleId::E4 => (
                ScalarField::new(dom, move |y: f64| (k * y).sinh()).with_derivative(move |y: f64| k * (k * y).cosh()),
                ScalarField::new(dom, move |y: f64| (k * (1.0 - y)).sinh())
                    .with_derivative(move |y: f64| -k * (k * (1.0 - y)).cosh()),
            ),
            ExampleId::E5 => return Err(Error::Unsupported("fundamental solutions for quadratic killing".into())),
        };
        FundamentalPair::new(psi, phi, mu, &scale_speed_killing(&self.spec_y)?.s_prime)
    }

    /// Fundamental solutions for the transformed process, obtained by
    /// applying `𝒟_h` to exponentials (line and half-line examples).
    pub fn greens_ytilde(&self, mu: f64) -> Result<FundamentalPair> {
        if !(mu > -0.5) {
            return Err(Error::InvalidSpec(format!(
                "μ = {mu} is not above the top of the spectrum"
            )));
        }
        let z = (2.0 * (1.0 + mu)).sqrt();
        let dom = self.spec_y.interval;
        let (psi, phi) = match self.id {
            ExampleId::E1 => (
                ScalarField::new(dom, move |y: f64| (z * y).exp() * (z - y.tanh()))
                    .with_derivative(move |y: f64| (z * y).exp() * (z * (z - y.tanh()) - 1.0 / y.cosh().powi(2))),
                ScalarField::new(dom, move |y: f64| (-z * y).exp() * (z + y.tanh()))
                    .with_derivative(move |y: f64| (-z * y).exp() * (-z * (z + y.tanh()) + 1.0 / y.cosh().powi(2))),
            ),
            ExampleId::E2 => (
                ScalarField::new(dom, move |y: f64| {
                    ((z * y).cosh() * z - (z * y).sinh() / y.tanh()) / (z * z - 1.0)
                })
                .with_derivative(move |y: f64| {
                    let (s, c) = ((z * y).sinh(), (z * y).cosh());
                    (z * z * s - z * c / y.tanh() + s / y.sinh().powi(2)) / (z * z - 1.0)
                }),
                ScalarField::new(dom, move |y: f64| (-z * y).exp() * (z + 1.0 / y.tanh())).with_derivative(
                    move |y: f64| (-z * y).exp() * (-z * (z + 1.0 / y.tanh()) - 1.0 / y.sinh().powi(2)),
                ),
            ),
            _ => {
                return Err(Error::Unsupported(format!(
                    "transformed fundamental solutions for {}",
                    self.id
                )))
            }
        };
        let s_prime = ScalarField::constant(dom, 2.0);
        FundamentalPair::new(psi, phi, mu, &s_prime)
    }
}
