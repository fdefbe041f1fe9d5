//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! Semi-infinite ranges are mapped onto `(0, 1]` with `x = a + (1 - u) / u`;
//! the real line is split at a breakpoint into two such pieces. Every run
//! also returns its final [`Partition`], so that a family of integrands
//! `f(x; theta)` can be integrated with identical nodes. Difference
//! quotients in `theta` then see only smooth, systematic rule error.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], .., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Default absolute/relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mapping {
    Identity,
    /// `x = a + (1 - u) / u`
    Upper(f64),
    /// `x = b - (1 - u) / u`
    Lower(f64),
}

impl Mapping {
    #[inline]
    fn apply(self, u: f64) -> (f64, f64) {
        match self {
            Mapping::Identity => (u, 1.0),
            Mapping::Upper(a) => (a + (1.0 - u) / u, 1.0 / (u * u)),
            Mapping::Lower(b) => (b - (1.0 - u) / u, 1.0 / (u * u)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    map: Mapping,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// The subdivision produced by an adaptive run.
#[derive(Debug, Clone)]
pub struct Partition {
    segments: Vec<(Mapping, f64, f64)>,
}

impl Partition {
    /// Integrates `f` with the stored subdivision and the 21-point Kronrod rule.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        let f: &dyn Fn(f64) -> f64 = &f;
        let mut sum = 0.0;
        let mut comp = 0.0;
        for &(map, lo, hi) in &self.segments {
            let (k, _, _, _) = kronrod(f, map, lo, hi);
            let y = k - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Returns (kronrod, error, resabs, resasc) for one segment.
fn kronrod(f: &dyn Fn(f64) -> f64, map: Mapping, lo: f64, hi: f64) -> (f64, f64, f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let g = |u: f64| {
        let (x, jac) = map.apply(u);
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    };
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let fc = g(center);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = WGK[10] * fc.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = g(center - dx);
        let f2 = g(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let resk = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = (resk - resg * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 5.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && floor > err {
        err = floor;
    }
    (resk, err, resabs, resasc)
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::with_tol(DEFAULT_TOL)
    }
}

impl Quadrature {
    /// Absolute and relative tolerance both set to `tol`.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            max_segments: 4000,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<QuadratureResult> {
        self.integrate_with_breaks(f, a, b, &[]).map(|(r, _)| r)
    }

    /// Integrates over `(a, b)` split at `breaks` (points outside `(a, b)` are
    /// ignored) and returns the final partition as well.
    ///
    /// With `a > b` the value is negated; the partition always describes the
    /// sorted range.
    pub fn integrate_with_breaks(
        &self,
        f: impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<(QuadratureResult, Partition)> {
        if a > b {
            let (mut r, p) = self.integrate_sorted(&f, b, a, breaks)?;
            r.value = -r.value;
            return Ok((r, p));
        }
        self.integrate_sorted(&f, a, b, breaks)
    }

    fn integrate_sorted(
        &self,
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<(QuadratureResult, Partition)> {
        if a == b {
            return Ok((
                QuadratureResult {
                    value: 0.0,
                    error_estimate: 0.0,
                    evaluations: 1,
                },
                Partition { segments: vec![] },
            ));
        }
        let mut pts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|p| p.is_finite() && *p > a && *p < b)
            .collect();
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        if a.is_infinite() && b.is_infinite() && pts.is_empty() {
            pts.push(0.0);
        }
        let mut knots = vec![a];
        knots.extend(pts);
        knots.push(b);

        let mut pieces = Vec::new();
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let piece = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (Mapping::Identity, lo, hi),
                (true, false) => (Mapping::Upper(lo), 0.0, 1.0),
                (false, true) => (Mapping::Lower(hi), 0.0, 1.0),
                (false, false) => unreachable!("real line is split at a breakpoint"),
            };
            pieces.push(piece);
        }
        self.run(f, &pieces)
    }

    fn run(&self, f: &dyn Fn(f64) -> f64, pieces: &[(Mapping, f64, f64)]) -> Result<(QuadratureResult, Partition)> {
        let mut evaluations = 0;
        let mut segs: Vec<Segment> = Vec::with_capacity(64);
        for &(map, lo, hi) in pieces {
            let seg = self.eval_segment(f, map, lo, hi)?;
            evaluations += 21;
            segs.push(seg);
        }
        loop {
            let (total, err) = totals(&segs);
            if !total.is_finite() {
                return Err(Error::QuadratureFailure("integral is not finite".into()));
            }
            let target = self.abs_tol.max(self.rel_tol * total.abs());
            if err <= target {
                let partition = Partition {
                    segments: segs.iter().map(|s| (s.map, s.lo, s.hi)).collect(),
                };
                return Ok((
                    QuadratureResult {
                        value: total,
                        error_estimate: err,
                        evaluations,
                    },
                    partition,
                ));
            }
            let worst = segs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let s = segs[worst];
            let mid = 0.5 * (s.lo + s.hi);
            let tiny = (s.hi - s.lo).abs() <= 4.0 * f64::EPSILON * (1.0 + mid.abs());
            if segs.len() >= self.max_segments || tiny {
                return Err(Error::NonConvergence {
                    estimate: err,
                    tol: target,
                    evaluations,
                });
            }
            let left = self.eval_segment(f, s.map, s.lo, mid)?;
            let right = self.eval_segment(f, s.map, mid, s.hi)?;
            evaluations += 42;
            segs[worst] = left;
            segs.push(right);
        }
    }

    fn eval_segment(&self, f: &dyn Fn(f64) -> f64, map: Mapping, lo: f64, hi: f64) -> Result<Segment> {
        let (k, err, _, _) = kronrod(f, map, lo, hi);
        if !k.is_finite() || !err.is_finite() {
            let (x, _) = map.apply(0.5 * (lo + hi));
            return Err(Error::NonFiniteIntegrand { x });
        }
        Ok(Segment {
            map,
            lo,
            hi,
            value: k,
            error: err,
        })
    }
}

fn totals(segs: &[Segment]) -> (f64, f64) {
    let mut v = 0.0;
    let mut c = 0.0;
    let mut e = 0.0;
    for s in segs {
        let y = s.value - c;
        let t = v + y;
        c = (t - v) - y;
        v = t;
        e += s.error;
    }
    (v, e)
}

/// Adaptive quadrature of `f` over `(a, b)` with absolute and relative
/// tolerance `tol`; either endpoint may be infinite.
pub fn quad_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    Quadrature::with_tol(tol).integrate(f, a, b)
}

/// Walks from `start` in `direction` (±1) until `|f|` has dropped below
/// `rel` times the largest magnitude seen, and returns that point. Used to
/// replace an infinite limit by a finite one for integrands whose factors
/// overflow separately far out.
pub fn tail_cutoff(f: impl Fn(f64) -> f64, start: f64, direction: f64, scale: f64, rel: f64) -> f64 {
    let mut peak = f(start).abs();
    let mut step = scale.max(1e-6);
    let mut x = start;
    let mut quiet = 0;
    for _ in 0..400 {
        x += direction * step;
        let v = f(x).abs();
        if !v.is_finite() {
            return x;
        }
        if v > peak {
            peak = v;
            quiet = 0;
        } else if v <= rel * peak {
            quiet += 1;
            if quiet >= 3 {
                return x;
            }
        } else {
            quiet = 0;
        }
        step *= 1.25;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trivial_integrals() {
        let r = quad_adaptive(|x| x, 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        assert!(r.error_estimate >= 0.0 && r.evaluations >= 1);
        let r = quad_adaptive(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-12).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-12);
        let r = quad_adaptive(|x: f64| (-x).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = quad_adaptive(|x: f64| x.exp(), f64::NEG_INFINITY, 0.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = quad_adaptive(|x| x * x, 1.0, 0.0, 1e-12).unwrap();
        assert!((r.value + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_reports_nonconvergence() {
        let q = Quadrature {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_segments: 3,
        };
        let r = q.integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn partition_reuse_reproduces_value() {
        let q = Quadrature::with_tol(1e-12);
        let (r, p) = q
            .integrate_with_breaks(
                |x| (-(x - 0.3) * (x - 0.3)).exp(),
                f64::NEG_INFINITY,
                f64::INFINITY,
                &[0.3],
            )
            .unwrap();
        let again = p.apply(|x| (-(x - 0.3) * (x - 0.3)).exp());
        assert!((r.value - again).abs() < 1e-14);
        assert!(!p.is_empty());
    }

    #[test]
    fn cutoff_of_gaussian() {
        let x = tail_cutoff(|u| (-u * u / 2.0).exp(), 0.0, 1.0, 0.1, 1e-18);
        assert!((-x * x / 2.0).exp() < 1e-17 && x < 40.0);
    }
}
