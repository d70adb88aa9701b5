//! Open sets D ⊊ ℝⁿ and their boundary-distance functions.
//!
//! Every metric in this crate consumes D only through `d_D(x) = dist(x, ∂D)`,
//! so the built-in domains carry closed forms for it and nothing else:
//!
//! | domain            | interior        | d_D(x)             |
//! |-------------------|-----------------|--------------------|
//! | `ball:n`          | `|x| < 1`       | `1 − |x|`          |
//! | `halfspace:n`     | `xₙ > 0`        | `xₙ`               |
//! | `punctured:n`     | `x ≠ 0`         | `|x|`              |
//! | `interval:a:b`    | `a < x < b`     | `min(x − a, b − x)`|
//!
//! A [`GenericDomain`] supplies its own membership and distance oracles plus
//! a bounding window used for sampling and gridding.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::point::{self, Point};

/// Default lower bound on `d_D` for sampled points.
pub const DEFAULT_MIN_CLEARANCE: f64 = 1e-6;

/// Half-width of the sampling window used for the unbounded domains.
pub const UNBOUNDED_WINDOW: f64 = 2.0;

type DistanceOracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type MembershipOracle = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// An open set described by user-supplied oracles.
///
/// The distance oracle is expected to be 1-Lipschitz; that is checked by the
/// `L3_1` verification suite rather than trusted.
#[derive(Clone)]
pub struct GenericDomain {
    name: String,
    lo: Vec<f64>,
    hi: Vec<f64>,
    distance: DistanceOracle,
    membership: MembershipOracle,
}

impl GenericDomain {
    pub fn new<D, M>(name: impl Into<String>, lo: Vec<f64>, hi: Vec<f64>, distance: D, membership: M) -> Result<Self>
    where
        D: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        M: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        let name = name.into();
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidParameter("generic window bounds must share a nonzero dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
            return Err(Error::InvalidParameter("generic window needs finite lo < hi per axis".into()));
        }
        if name.contains(':') || name.is_empty() {
            return Err(Error::InvalidParameter("generic domain name must be nonempty and contain no ':'".into()));
        }
        Ok(GenericDomain { name, lo, hi, distance: Arc::new(distance), membership: Arc::new(membership) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for GenericDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericDomain")
            .field("name", &self.name)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Domain {
    UnitBall { dim: usize },
    HalfSpace { dim: usize },
    PuncturedSpace { dim: usize },
    Interval { a: f64, b: f64 },
    Generic(GenericDomain),
}

impl Domain {
    pub fn ball(dim: usize) -> Result<Self> {
        check_dim_arg(dim)?;
        Ok(Domain::UnitBall { dim })
    }

    pub fn half_space(dim: usize) -> Result<Self> {
        check_dim_arg(dim)?;
        Ok(Domain::HalfSpace { dim })
    }

    pub fn punctured(dim: usize) -> Result<Self> {
        check_dim_arg(dim)?;
        Ok(Domain::PuncturedSpace { dim })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("interval needs finite a < b, got ({a}, {b})")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::UnitBall { dim } | Domain::HalfSpace { dim } | Domain::PuncturedSpace { dim } => *dim,
            Domain::Interval { .. } => 1,
            Domain::Generic(g) => g.lo.len(),
        }
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.contains_raw(x.coords()))
    }

    /// `d_D(x)`; errors unless `x` lies in the open set.
    pub fn boundary_distance(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.dim())?;
        let c = x.coords();
        if !self.contains_raw(c) {
            return Err(Error::OutsideDomain(c.to_vec()));
        }
        let d = self.distance_raw(c);
        if d > 0.0 && d.is_finite() {
            Ok(d)
        } else {
            // A generic oracle disagreeing with its own membership test, or an
            // interior point so close to ∂D that d underflows.
            Err(Error::OutsideDomain(c.to_vec()))
        }
    }

    pub(crate) fn contains_raw(&self, x: &[f64]) -> bool {
        match self {
            Domain::UnitBall { .. } => point::norm_sq(x) < 1.0,
            Domain::HalfSpace { dim } => x[dim - 1] > 0.0,
            Domain::PuncturedSpace { .. } => x.iter().any(|&c| c != 0.0),
            Domain::Interval { a, b } => *a < x[0] && x[0] < *b,
            Domain::Generic(g) => (g.membership)(x),
        }
    }

    /// Closed-form distance without membership checks. Only meaningful for
    /// interior points.
    pub(crate) fn distance_raw(&self, x: &[f64]) -> f64 {
        match self {
            Domain::UnitBall { .. } => 1.0 - point::norm(x),
            Domain::HalfSpace { dim } => x[dim - 1],
            Domain::PuncturedSpace { .. } => point::norm(x),
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Generic(g) => (g.distance)(x),
        }
    }

    /// Axis-aligned box that sampling draws from. Bounded domains use their
    /// bounding box; half-space and punctured space use a fixed window.
    pub fn sampling_window(&self) -> (Vec<f64>, Vec<f64>) {
        let w = UNBOUNDED_WINDOW;
        match self {
            Domain::UnitBall { dim } => (vec![-1.0; *dim], vec![1.0; *dim]),
            Domain::HalfSpace { dim } => {
                let mut hi = vec![w; *dim];
                let mut lo = vec![-w; *dim];
                lo[dim - 1] = 0.0;
                hi[dim - 1] = w;
                (lo, hi)
            }
            Domain::PuncturedSpace { dim } => (vec![-w; *dim], vec![w; *dim]),
            Domain::Interval { a, b } => (vec![*a], vec![*b]),
            Domain::Generic(g) => (g.lo.clone(), g.hi.clone()),
        }
    }

    /// Largest `d_D` attainable inside the sampling window, when known.
    fn max_clearance(&self) -> Option<f64> {
        match self {
            Domain::UnitBall { .. } => Some(1.0),
            Domain::HalfSpace { .. } => Some(UNBOUNDED_WINDOW),
            Domain::PuncturedSpace { dim } => Some(UNBOUNDED_WINDOW * (*dim as f64).sqrt()),
            Domain::Interval { a, b } => Some((b - a) / 2.0),
            Domain::Generic(_) => None,
        }
    }

    /// Draws one interior point uniformly from the sampling window with
    /// `d_D ≥ min_clearance`, giving up after `max_attempts` rejections.
    pub(crate) fn sample_uniform<R: Rng>(&self, rng: &mut R, min_clearance: f64, max_attempts: usize) -> Option<Vec<f64>> {
        let (lo, hi) = self.sampling_window();
        for _ in 0..max_attempts {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect();
            if self.contains_raw(&x) && self.distance_raw(&x) >= min_clearance {
                return Some(x);
            }
        }
        None
    }

    /// A point at boundary distance (approximately) `depth`. Only the
    /// closed-form domains know where their boundary is; generic domains
    /// return `None`.
    pub(crate) fn sample_at_depth<R: Rng>(&self, rng: &mut R, depth: f64) -> Option<Vec<f64>> {
        match self {
            Domain::UnitBall { dim } => {
                let u = random_direction(rng, *dim);
                Some(u.iter().map(|c| c * (1.0 - depth)).collect())
            }
            Domain::HalfSpace { dim } => {
                let (lo, hi) = self.sampling_window();
                let mut x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect();
                x[dim - 1] = depth;
                Some(x)
            }
            Domain::PuncturedSpace { dim } => {
                let u = random_direction(rng, *dim);
                Some(u.iter().map(|c| c * depth).collect())
            }
            Domain::Interval { a, b } => {
                if depth >= (b - a) / 2.0 {
                    return None;
                }
                Some(vec![if rng.random::<bool>() { a + depth } else { b - depth }])
            }
            Domain::Generic(_) => None,
        }
    }

    /// Distance from interior point `z` along unit direction `u` until the
    /// boundary, capped at `max_len`. Sphere tracing on `d_D`, which works
    /// for any 1-Lipschitz distance.
    pub(crate) fn ray_exit(&self, z: &[f64], u: &[f64], max_len: f64) -> f64 {
        let mut t = 0.0;
        for _ in 0..500 {
            let p: Vec<f64> = z.iter().zip(u).map(|(a, b)| a + t * b).collect();
            if !self.contains_raw(&p) {
                return t;
            }
            let d = self.distance_raw(&p);
            if d < 1e-13 * (1.0 + t) {
                return t;
            }
            t += d;
            if t >= max_len {
                return max_len;
            }
        }
        t.min(max_len)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::UnitBall { dim } => write!(f, "ball:{dim}"),
            Domain::HalfSpace { dim } => write!(f, "halfspace:{dim}"),
            Domain::PuncturedSpace { dim } => write!(f, "punctured:{dim}"),
            Domain::Interval { a, b } => write!(f, "interval:{a}:{b}"),
            Domain::Generic(g) => write!(f, "generic:{}:{}", g.name, g.lo.len()),
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    /// Parses `ball:n`, `halfspace:n`, `punctured:n` and `interval:a:b`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized domain '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let dim = |p: &str| p.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["ball", n] => Domain::ball(dim(n)?),
            ["halfspace", n] => Domain::half_space(dim(n)?),
            ["punctured", n] => Domain::punctured(dim(n)?),
            ["interval", a, b] => {
                let a = a.parse::<f64>().map_err(|_| bad())?;
                let b = b.parse::<f64>().map_err(|_| bad())?;
                Domain::interval(a, b)
            }
            _ => Err(bad()),
        }
    }
}

fn check_dim_arg(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

/// A nonempty finite set of points in the complement of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(domain: &Domain, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        for p in &points {
            if domain.contains(p)? {
                return Err(Error::InvalidParameter(format!("set member {p} lies inside {domain}")));
            }
        }
        Ok(PointSet { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

/// `d_{D,A}(x) = dist(x, A)`.
pub fn distance_to_set(x: &Point, set: &PointSet) -> Result<f64> {
    let mut best = f64::INFINITY;
    for a in &set.points {
        best = best.min(x.distance(a)?);
    }
    Ok(best)
}

/// Deterministic interior sample: uniform over the sampling window with
/// rejection, keeping only points with `d_D ≥ min_clearance`.
pub fn sample_interior(domain: &Domain, count: usize, seed: u64, min_clearance: f64) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    if !(min_clearance > 0.0 && min_clearance.is_finite()) {
        return Err(Error::InvalidParameter(format!("min_clearance must be positive, got {min_clearance}")));
    }
    let infeasible = || Error::InfeasibleClearance { domain: domain.to_string(), clearance: min_clearance };
    if domain.max_clearance().is_some_and(|m| min_clearance >= m) {
        return Err(infeasible());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x = domain.sample_uniform(&mut rng, min_clearance, 1_000_000).ok_or_else(infeasible)?;
        out.push(Point::from_raw(x));
    }
    Ok(out)
}

/// Uniformly distributed unit vector.
pub(crate) fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = point::norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}
