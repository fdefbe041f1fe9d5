//! Euler-Maruyama simulation of killed, reflected and elastic diffusions,
//! used as an independent check on the kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::catalog::{Elastic, ExampleId, ExampleModel};
use crate::darboux::SeedFunction;
use crate::diffusion::{BoundaryCondition, DiffusionSpec};
use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;
use crate::math::{Interval, Quadrature, ScalarField};

/// Fewer survivors than this make histogram and moment checks meaningless.
pub const MIN_SURVIVORS: usize = 100;
/// Fraction of steps allowed to exceed `dt |drift| > 0.5` before a run is
/// rejected.
const STEP_FLAG_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(dt: f64, n_paths: usize, seed: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config {
                line: None,
                field: "dt".into(),
                message: format!("time step must be positive, got {dt}"),
            });
        }
        if n_paths == 0 {
            return Err(Error::Config {
                line: None,
                field: "paths".into(),
                message: "need at least one path".into(),
            });
        }
        Ok(Self { dt, n_paths, seed })
    }

    /// Whether the settings are fine enough for the acceptance checks.
    pub fn is_acceptance_grade(&self) -> bool {
        self.dt <= 1e-2 && self.n_paths >= 10_000
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimOutcome {
    Alive { position: f64 },
    Dead { kill_time: f64 },
}

impl SimOutcome {
    pub fn alive(&self) -> bool {
        matches!(self, SimOutcome::Alive { .. })
    }

    pub fn position(&self) -> Option<f64> {
        match *self {
            SimOutcome::Alive { position } => Some(position),
            SimOutcome::Dead { .. } => None,
        }
    }
}

/// Runs `f` on a pool sized by `DARBOUX_THREADS` when that is set.
fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("DARBOUX_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Kahan-compensated sum, independent of scheduling since inputs are ordered.
fn kahan(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

struct Stepper<'a> {
    spec: &'a DiffusionSpec,
    dt: f64,
    sqdt: f64,
    constant_drift: Option<f64>,
    constant_sigma: Option<f64>,
    constant_rate: Option<f64>,
}

enum Step {
    Continue(f64),
    Killed,
}

/// A finite end of the state space, with `dir = +1` at the left end and
/// `-1` at the right so that `dir (x - pos) > 0` inside.
#[derive(Clone, Copy)]
struct Wall {
    pos: f64,
    dir: f64,
    bc: BoundaryCondition,
}

impl Stepper<'_> {
    fn drift(&self, x: f64) -> f64 {
        self.constant_drift.unwrap_or_else(|| self.spec.drift.eval(x))
    }

    fn sigma(&self, x: f64) -> f64 {
        self.constant_sigma.unwrap_or_else(|| self.spec.sigma.eval(x))
    }

    fn rate(&self, x: f64) -> f64 {
        self.constant_rate.unwrap_or_else(|| self.spec.killing.eval(x))
    }

    /// Boundary handling for a step from `a` to the unconstrained endpoint
    /// `b` with local volatility `sig`.
    fn boundary(&self, rng: &mut ChaCha8Rng, wall: Wall, a: f64, b: f64, sig: f64) -> Step {
        let Wall { pos: end, dir, bc } = wall;
        let da = dir * (a - end);
        let db = dir * (b - end);
        let var = sig * sig * self.dt;
        match bc {
            BoundaryCondition::Killing => {
                if db <= 0.0 {
                    return Step::Killed;
                }
                // Brownian-bridge probability of touching the end in between.
                let p = (-2.0 * da * db / var).exp();
                if rng.random::<f64>() < p {
                    Step::Killed
                } else {
                    Step::Continue(b)
                }
            }
            BoundaryCondition::Reflecting => Step::Continue(if db < 0.0 { end - dir * db } else { b }),
            BoundaryCondition::Elastic(gamma) => {
                // Skorokhod reflection: the pushing term equals how far the
                // bridge minimum dips past the end, sampled exactly.
                let u: f64 = rng.random();
                let m = 0.5 * (da + db - ((da - db).powi(2) - 2.0 * var * (1.0 - u).ln()).sqrt());
                let push = (-m).max(0.0);
                if push > 0.0 && rng.random::<f64>() < 1.0 - (-gamma * push).exp() {
                    return Step::Killed;
                }
                Step::Continue(end + dir * (db + push))
            }
            // A finite end with no condition is only reached by leaving the
            // state space, which for the processes here means absorption.
            BoundaryCondition::NotApplicable => {
                if db <= 0.0 {
                    Step::Killed
                } else {
                    Step::Continue(b)
                }
            }
        }
    }

    fn run(&self, rng: &mut ChaCha8Rng, x0: f64, n_steps: usize) -> (SimOutcome, u64) {
        let dom = self.spec.interval;
        let walls = [
            (dom.left.is_finite()).then_some(Wall {
                pos: dom.left,
                dir: 1.0,
                bc: self.spec.left_bc,
            }),
            (dom.right.is_finite()).then_some(Wall {
                pos: dom.right,
                dir: -1.0,
                bc: self.spec.right_bc,
            }),
        ];
        let threshold: f64 = rng.sample(Exp1);
        let mut hazard = 0.0;
        let mut x = x0;
        let mut flagged = 0u64;
        for k in 0..n_steps {
            let mu = self.drift(x);
            if self.dt * mu.abs() > 0.5 {
                flagged += 1;
            }
            let sig = self.sigma(x);
            let z: f64 = rng.sample(StandardNormal);
            let mut next = x + mu * self.dt + sig * self.sqdt * z;
            let time = (k + 1) as f64 * self.dt;
            for wall in walls.into_iter().flatten() {
                match self.boundary(rng, wall, x, next, sig) {
                    Step::Killed => return (SimOutcome::Dead { kill_time: time }, flagged),
                    Step::Continue(v) => next = v,
                }
            }
            hazard += self.rate(x) * self.dt;
            if hazard >= threshold {
                return (SimOutcome::Dead { kill_time: time }, flagged);
            }
            x = next;
        }
        (SimOutcome::Alive { position: x }, flagged)
    }
}

/// Simulates `cfg.n_paths` independent paths of `spec` from `x0` up to time
/// `t`. Path `i` draws from its own ChaCha stream, so results do not depend
/// on thread scheduling.
pub fn simulate_paths(spec: &DiffusionSpec, x0: f64, t: f64, cfg: &SimConfig) -> Result<Vec<SimOutcome>> {
    if !spec.interval.contains(x0) {
        return Err(Error::InvalidSpec(format!("start {x0} outside the state space")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidSpec(format!("horizon must be nonnegative, got {t}")));
    }
    let n_steps = (t / cfg.dt).ceil() as usize;
    let dt = if n_steps > 0 { t / n_steps as f64 } else { cfg.dt };
    let stepper = Stepper {
        spec,
        dt,
        sqdt: dt.sqrt(),
        constant_drift: spec.drift.constant_value(),
        constant_sigma: spec.sigma.constant_value(),
        constant_rate: spec.killing.constant_value(),
    };
    let results: Vec<(SimOutcome, u64)> = with_pool(|| {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| stepper.run(&mut path_rng(cfg.seed, i), x0, n_steps))
            .collect()
    });
    let flagged: u64 = results.iter().map(|r| r.1).sum();
    let total = (n_steps * cfg.n_paths) as u64;
    if total > 0 && flagged as f64 > STEP_FLAG_FRACTION * total as f64 {
        return Err(Error::StepTooLarge { flagged, total });
    }
    Ok(results.into_iter().map(|r| r.0).collect())
}

pub fn survival_fraction(outcomes: &[SimOutcome]) -> f64 {
    outcomes.iter().filter(|o| o.alive()).count() as f64 / outcomes.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinComparison {
    pub lo: f64,
    pub hi: f64,
    pub mc_mass: f64,
    pub kernel_mass: f64,
    /// `(mc - kernel) / se`, with the standard error taken under the kernel.
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityComparison {
    pub bins: Vec<BinComparison>,
    pub max_abs_z: f64,
    pub alive: usize,
    pub n_paths: usize,
}

impl DensityComparison {
    pub fn all_within(&self, z: f64) -> bool {
        self.max_abs_z <= z
    }
}

/// Compares the histogram of survivors over `edges` with the kernel mass of
/// each bin, `∫_bin p_t(x0, y) dy`.
pub fn mc_density_error(
    outcomes: &[SimOutcome],
    kernel: &TransitionKernel,
    t: f64,
    x0: f64,
    edges: &[f64],
) -> Result<DensityComparison> {
    let alive = outcomes.iter().filter(|o| o.alive()).count();
    if alive < MIN_SURVIVORS {
        return Err(Error::TooFewSurvivors {
            alive,
            required: MIN_SURVIVORS,
        });
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSpec("bin edges must be increasing".into()));
    }
    let n = outcomes.len() as f64;
    let mut counts = vec![0usize; edges.len() - 1];
    for p in outcomes.iter().filter_map(|o| o.position()) {
        if p >= edges[0] && p < edges[edges.len() - 1] {
            let i = edges.partition_point(|&e| e <= p) - 1;
            counts[i] += 1;
        }
    }
    let dom = kernel.domain();
    let mut bins = Vec::with_capacity(counts.len());
    let mut max_abs_z = 0.0_f64;
    for (i, &c) in counts.iter().enumerate() {
        let (lo, hi) = (edges[i].max(dom.left), edges[i + 1].min(dom.right));
        let kernel_mass = if hi > lo {
            Quadrature::with_tol(1e-10)
                .integrate(|y| kernel.eval(t, x0, y), lo, hi)
                .map_err(|e| Error::QuadratureFailure(format!("bin [{lo}, {hi}]: {e}")))?
                .value
        } else {
            0.0
        };
        let mc_mass = c as f64 / n;
        let q = kernel_mass.clamp(0.0, 1.0);
        let se = (q * (1.0 - q) / n).sqrt();
        let z = if se > 0.0 {
            (mc_mass - kernel_mass) / se
        } else if c > 0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_abs_z = max_abs_z.max(z.abs());
        bins.push(BinComparison {
            lo: edges[i],
            hi: edges[i + 1],
            mc_mass,
            kernel_mass,
            z_score: z,
        });
    }
    Ok(DensityComparison {
        bins,
        max_abs_z,
        alive,
        n_paths: outcomes.len(),
    })
}

/// Process with generator `½∂² - (h'/h)∂` on the seed's interval; finite
/// ends take `bcs`.
pub fn xtilde_spec(seed: &SeedFunction, left: BoundaryCondition, right: BoundaryCondition) -> Result<DiffusionSpec> {
    let dom = seed.h.domain();
    let s = seed.clone();
    DiffusionSpec::new(
        dom,
        ScalarField::new(dom, move |x| -s.log_derivative(x)),
        ScalarField::constant(dom, 1.0),
        ScalarField::constant(dom, 0.0),
        left,
        right,
        0.5,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessiveReport {
    pub estimate: f64,
    pub std_err: f64,
    pub upper_ci: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Relative slack allowed on the excessive bound.
pub const EXCESSIVE_SLACK: f64 = 0.01;

/// Monte-Carlo estimate of `E_x[h(X̃_t)]` (dead paths count as zero) with a
/// three-standard-error upper bound, checked against `e^{(m_h+λ)t} h(x)`.
pub fn excessive_check(
    seed: &SeedFunction,
    m_h: f64,
    spec_xtilde: &DiffusionSpec,
    x0: f64,
    t: f64,
    cfg: &SimConfig,
) -> Result<ExcessiveReport> {
    let bound = ((m_h + seed.lambda) * t).exp() * seed.h.eval(x0);
    if t == 0.0 {
        let h = seed.h.eval(x0);
        return Ok(ExcessiveReport {
            estimate: h,
            std_err: 0.0,
            upper_ci: h,
            bound,
            pass: h <= bound,
        });
    }
    let outcomes = simulate_paths(spec_xtilde, x0, t, cfg)?;
    let alive = outcomes.iter().filter(|o| o.alive()).count();
    if alive < MIN_SURVIVORS {
        return Err(Error::TooFewSurvivors {
            alive,
            required: MIN_SURVIVORS,
        });
    }
    let vals: Vec<f64> = outcomes
        .iter()
        .map(|o| o.position().map_or(0.0, |p| seed.h.eval(p)))
        .collect();
    let n = vals.len() as f64;
    let mean = kahan(vals.iter().copied()) / n;
    let var = kahan(vals.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    let std_err = (var / n).sqrt();
    let upper_ci = mean + 3.0 * std_err;
    Ok(ExcessiveReport {
        estimate: mean,
        std_err,
        upper_ci,
        bound,
        pass: upper_ci <= bound * (1.0 + EXCESSIVE_SLACK),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary52Report {
    pub alpha: f64,
    pub mc: f64,
    pub std_err: f64,
    pub quadrature: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// Checks
/// `E_x[exp(-∫_0^t κ(W_s) ds); W_t ≤ y, min_{s≤t} W_s > α] = ∫_0^{y-α} p̃_t(x-α, u) du`
/// for the elastic example with `γ ≠ 1`, where `α = -½ ln|β|`, `κ = tanh²`
/// when `γ < 1` and `κ = coth²` when `γ > 1`, and `p̃` is the transformed
/// elastic kernel.
pub fn corollary52_check(gamma: f64, t: f64, x: f64, y: f64, cfg: &SimConfig) -> Result<Corollary52Report> {
    let el = Elastic::new(gamma);
    let alpha = el
        .alpha()
        .ok_or_else(|| Error::InvalidSpec("the identity needs γ ≠ 1".into()))?;
    if !(x > alpha) {
        return Err(Error::InvalidSpec(format!("start {x} must exceed α = {alpha}")));
    }
    let model = ExampleModel::new(ExampleId::E3 { gamma })?;
    let quadrature = if y <= alpha {
        0.0
    } else {
        Quadrature::with_tol(1e-11)
            .integrate(|u| model.pytilde_eval(t, x - alpha, u), 0.0, y - alpha)?
            .value
    };
    let dom = Interval::new(alpha, f64::INFINITY)?;
    let kappa = if gamma < 1.0 {
        ScalarField::new(dom, |w: f64| w.tanh().powi(2))
    } else {
        ScalarField::new(dom, |w: f64| w.tanh().powi(-2))
    };
    let spec = DiffusionSpec::killed_bm(dom, kappa, BoundaryCondition::Killing, BoundaryCondition::NotApplicable)?;
    let outcomes = simulate_paths(&spec, x, t, cfg)?;
    let alive = outcomes.iter().filter(|o| o.alive()).count();
    if alive < MIN_SURVIVORS {
        return Err(Error::TooFewSurvivors {
            alive,
            required: MIN_SURVIVORS,
        });
    }
    let n = outcomes.len() as f64;
    let hits = outcomes.iter().filter(|o| o.position().is_some_and(|p| p <= y)).count() as f64;
    let mc = hits / n;
    let std_err = (mc * (1.0 - mc) / n).sqrt();
    let se0 = (quadrature.clamp(0.0, 1.0) * (1.0 - quadrature.clamp(0.0, 1.0)) / n).sqrt();
    let z_score = if se0 > 0.0 {
        (mc - quadrature) / se0
    } else if hits > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(Corollary52Report {
        alpha,
        mc,
        std_err,
        quadrature,
        z_score,
        pass: z_score.abs() <= 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm(rate: f64) -> DiffusionSpec {
        let line = Interval::real_line();
        DiffusionSpec::killed_bm(
            line,
            ScalarField::constant(line, rate),
            BoundaryCondition::NotApplicable,
            BoundaryCondition::NotApplicable,
        )
        .unwrap()
    }

    #[test]
    fn free_bm_is_a_martingale() {
        let cfg = SimConfig::new(1e-2, 20_000, 7).unwrap();
        let out = simulate_paths(&bm(0.0), 0.3, 1.0, &cfg).unwrap();
        let xs: Vec<f64> = out.iter().filter_map(|o| o.position()).collect();
        assert_eq!(xs.len(), out.len());
        let mean = kahan(xs.iter().copied()) / xs.len() as f64;
        assert!((mean - 0.3).abs() < 3.0 / (xs.len() as f64).sqrt());
    }

    #[test]
    fn constant_rate_kills_exponentially() {
        let cfg = SimConfig::new(1e-2, 20_000, 11).unwrap();
        let out = simulate_paths(&bm(1.0), 0.0, 1.0, &cfg).unwrap();
        let p = (-1.0_f64).exp();
        let se = (p * (1.0 - p) / out.len() as f64).sqrt();
        assert!((survival_fraction(&out) - p).abs() < 3.0 * se);
    }

    #[test]
    fn same_seed_same_paths() {
        let cfg = SimConfig::new(1e-2, 500, 3).unwrap();
        let a = simulate_paths(&bm(0.5), 0.0, 0.5, &cfg).unwrap();
        let b = simulate_paths(&bm(0.5), 0.0, 0.5, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&bm(0.5), 0.0, 0.5, &SimConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(SimConfig::new(0.0, 10, 1).is_err());
        assert!(SimConfig::new(1e-3, 0, 1).is_err());
        assert!(!SimConfig::new(0.1, 20_000, 1).unwrap().is_acceptance_grade());
    }
}
