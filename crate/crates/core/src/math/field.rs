use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::diff::{default_step, fd_derivative};

/// Open interval `(left, right)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if left.is_nan() || right.is_nan() || left >= right {
            return Err(Error::InvalidSpec(format!(
                "interval ({left}, {right}) requires left < right"
            )));
        }
        Ok(Self { left, right })
    }

    pub fn real_line() -> Self {
        Self {
            left: f64::NEG_INFINITY,
            right: f64::INFINITY,
        }
    }

    pub fn positive_half_line() -> Self {
        Self {
            left: 0.0,
            right: f64::INFINITY,
        }
    }

    pub fn unit() -> Self {
        Self { left: 0.0, right: 1.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.left && x < self.right
    }

    pub fn is_bounded(&self) -> bool {
        self.left.is_finite() && self.right.is_finite()
    }

    /// Fixed interior reference point: midpoint, 0 on the real line, one unit
    /// inside the finite end of a half-line.
    pub fn reference_point(&self) -> f64 {
        match (self.left.is_finite(), self.right.is_finite()) {
            (true, true) => 0.5 * (self.left + self.right),
            (false, false) => 0.0,
            (true, false) => self.left + 1.0,
            (false, true) => self.right - 1.0,
        }
    }

    /// `n` interior points. Finite ends are approached to within `margin`,
    /// infinite ends are cut at `reach` from the reference point.
    pub fn probe_grid(&self, n: usize, margin: f64, reach: f64) -> Vec<f64> {
        let z = self.reference_point();
        let lo = if self.left.is_finite() {
            self.left + margin
        } else {
            z - reach
        };
        let hi = if self.right.is_finite() {
            self.right - margin
        } else {
            z + reach
        };
        linspace(lo, hi, n)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function on an interval, optionally carrying its analytic derivative.
#[derive(Clone)]
pub struct ScalarField {
    eval: RealFn,
    derivative: Option<RealFn>,
    domain: Interval,
    constant: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("domain", &self.domain)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("constant", &self.constant)
            .finish()
    }
}

impl ScalarField {
    pub fn new(domain: Interval, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            derivative: None,
            domain,
            constant: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn constant(domain: Interval, c: f64) -> Self {
        Self {
            eval: Arc::new(move |_| c),
            derivative: Some(Arc::new(|_| 0.0)),
            domain,
            constant: Some(c),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `Some(c)` when the field was built with [`ScalarField::constant`].
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Analytic derivative when present, otherwise a central difference.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        match &self.derivative {
            Some(d) => Ok(d(x)),
            None => fd_derivative(self, x, 1, default_step(x)),
        }
    }

    /// The derivative as a field of its own (finite differences if needed).
    pub fn derivative_field(&self) -> ScalarField {
        match &self.derivative {
            Some(d) => {
                let d = d.clone();
                ScalarField::new(self.domain, move |x| d(x))
            }
            None => {
                let me = self.clone();
                ScalarField::new(self.domain, move |x| me.derivative(x).unwrap_or(f64::NAN))
            }
        }
    }

    /// Relabels the domain (used when a formula is valid on a wider set).
    pub fn on(mut self, domain: Interval) -> Self {
        self.domain = domain;
        self
    }

    /// Largest deviation between the analytic derivative and a central
    /// difference over `grid`, relative to `1 + |f'|`.
    pub fn derivative_consistency(&self, grid: &[f64]) -> Result<f64> {
        let Some(d) = &self.derivative else {
            return Ok(0.0);
        };
        let mut worst = 0.0_f64;
        for &x in grid {
            let fd = fd_derivative(self, x, 1, default_step(x))?;
            let a = d(x);
            worst = worst.max((fd - a).abs() / (1.0 + a.abs()));
        }
        Ok(worst)
    }
}
