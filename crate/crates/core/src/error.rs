use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "quadrature did not converge: error estimate {estimate:e} > tolerance {tol:e} after {evaluations} evaluations"
    )]
    NonConvergence {
        estimate: f64,
        tol: f64,
        evaluations: usize,
    },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("point {x} is too close to the domain boundary for step {step:e}")]
    DomainMargin { x: f64, step: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("boundary classification is inconclusive: {0}")]
    Inconclusive(String),
    #[error("degenerate Wronskian: |omega| = {0:e}")]
    DegenerateWronskian(f64),
    #[error("invalid diffusion specification: {0}")]
    InvalidSpec(String),
    #[error("invalid seed function: {0}")]
    InvalidSeed(String),
    #[error("sup c - (h'/h)^2 grows without bound under grid refinement (last value {0:e})")]
    Unbounded(f64),
    #[error("transformed killing rate is negative ({rate:e}) at y = {y}")]
    NegativeRate { y: f64, rate: f64 },
    #[error("precondition residual {residual:e} exceeds tolerance {tol:e}")]
    PreconditionResidual { residual: f64, tol: f64 },
    #[error("series converges too slowly at t = {t} (floor {floor}, tail bound {bound:e})")]
    SlowConvergence { t: f64, floor: f64, bound: f64 },
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("Euler step too large: dt * |drift| exceeded 0.5 on {flagged} of {total} steps")]
    StepTooLarge { flagged: u64, total: u64 },
    #[error("too few surviving paths: {alive} alive, at least {required} required")]
    TooFewSurvivors { alive: usize, required: usize },
    #[error("configuration error{}: field `{field}`: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
