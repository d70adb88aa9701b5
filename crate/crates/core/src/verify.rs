//! Seeded verification and falsification of metric inequalities.
//!
//! Every routine samples configurations deterministically from a seed,
//! evaluates a *slack* per sample (nonnegative when the inequality holds)
//! and reduces to the minimum slack plus the configuration that produced
//! it. Sample `i` draws from its own ChaCha stream, so the result does not
//! depend on how the work is split across threads.
//!
//! Triples mix three strategies in a fixed 60/25/15 proportion by index:
//! uniform interior points, boundary-hugging points at log-uniform depth in
//! `[1e-6, 1e-1]`, and collinear configurations `x, z, y` with `z` between
//! two points close to the boundary on a common line.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{self, Domain, PointSet};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind, MetricParams};
use crate::moebius::{self, MoebiusMap};
use crate::point::{self, Point};
use crate::quasihyperbolic::{self, KControls};

/// Absolute tolerance for inequalities between closed-form quantities.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-9;
/// Tolerance for the two hyperbolic identities, on slack scaled by `max(1, |rhs|)`.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Tolerance for the Lipschitz property of boundary distances.
pub const LIPSCHITZ_TOLERANCE: f64 = 1e-12;
/// Relative tolerance wherever the quasihyperbolic estimate participates.
pub const ESTIMATOR_TOLERANCE: f64 = 0.02;

/// Number of random Möbius maps the distortion suites cycle through.
pub const DISTORTION_MAPS: usize = 20;

/// Pairs whose `j` falls below this are skipped by the uniformity estimate.
const MIN_J: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub suite_id: String,
    pub domain: String,
    pub params: MetricParams,
    pub seed: u64,
    pub sample_count: usize,
    pub min_slack: f64,
    /// Points of the worst configuration.
    pub witness: Vec<Vec<f64>>,
    pub pass: bool,
    pub tolerance: f64,
    /// Suite-specific scalars: the witness λ, measured constants, observed
    /// extremal ratios.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl InequalityReport {
    /// Re-evaluates `pass` under a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.min_slack >= -tolerance;
        self
    }
}

/// One evaluated sample, kept for CSV dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub index: usize,
    pub slack: f64,
    pub points: Vec<Point>,
}

/// A report together with every per-sample slack.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub report: InequalityReport,
    pub samples: Vec<SampleRow>,
}

#[derive(Debug, Clone, PartialEq)]
struct Evaluated {
    row: SampleRow,
    /// Observed ratio to maximize, when the suite tracks one.
    ratio: Option<f64>,
    /// Scalar recorded with the witness.
    scalar: Option<f64>,
}

impl Evaluated {
    fn new(index: usize, slack: f64, points: Vec<Point>) -> Self {
        Evaluated { row: SampleRow { index, slack, points }, ratio: None, scalar: None }
    }

    fn ratio(mut self, r: f64) -> Self {
        self.ratio = Some(r);
        self
    }

    fn scalar(mut self, s: f64) -> Self {
        self.scalar = Some(s);
        self
    }
}

struct ReportHeader<'a> {
    suite_id: String,
    domain: &'a Domain,
    params: MetricParams,
    seed: u64,
    tolerance: f64,
}

/// Order-stable reduction: the first sample attaining the minimum wins.
fn reduce(header: ReportHeader<'_>, evaluated: Vec<Evaluated>, ratio_key: Option<&str>, scalar_key: Option<&str>) -> Result<Scan> {
    if evaluated.is_empty() {
        return Err(Error::InvalidParameter("no samples evaluated".into()));
    }
    let mut worst = 0;
    let mut max_ratio = f64::NEG_INFINITY;
    for (i, e) in evaluated.iter().enumerate() {
        if !e.row.slack.is_finite() {
            return Err(Error::Numerical(format!("non-finite slack at sample {}", e.row.index)));
        }
        if e.row.slack < evaluated[worst].row.slack {
            worst = i;
        }
        if let Some(r) = e.ratio {
            max_ratio = max_ratio.max(r);
        }
    }
    let w = &evaluated[worst];
    let mut details = BTreeMap::new();
    if let (Some(key), true) = (ratio_key, max_ratio.is_finite()) {
        details.insert(key.to_string(), max_ratio);
    }
    if let (Some(key), Some(s)) = (scalar_key, w.scalar) {
        details.insert(key.to_string(), s);
    }
    let min_slack = w.row.slack;
    let report = InequalityReport {
        suite_id: header.suite_id,
        domain: header.domain.to_string(),
        params: header.params,
        seed: header.seed,
        sample_count: evaluated.len(),
        min_slack,
        witness: w.row.points.iter().map(|p| p.coords().to_vec()).collect(),
        pass: min_slack >= -header.tolerance,
        tolerance: header.tolerance,
        details,
    };
    Ok(Scan { report, samples: evaluated.into_iter().map(|e| e.row).collect() })
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn log_uniform<R: Rng>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(lo_exp + (hi_exp - lo_exp) * rng.random::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Strategy {
    Uniform,
    Hugging,
    Collinear,
}

impl Strategy {
    fn of(index: usize) -> Self {
        match index % 20 {
            0..12 => Strategy::Uniform,
            12..17 => Strategy::Hugging,
            _ => Strategy::Collinear,
        }
    }
}

/// Draws configurations for the closed-form scans.
struct TripleSampler<'a> {
    domain: &'a Domain,
    clearance: f64,
    diameter: f64,
}

impl<'a> TripleSampler<'a> {
    fn new(domain: &'a Domain) -> Self {
        let (lo, hi) = domain.sampling_window();
        TripleSampler { domain, clearance: domains::DEFAULT_MIN_CLEARANCE, diameter: point::distance(&lo, &hi) }
    }

    fn accept(&self, p: &[f64]) -> bool {
        self.domain.contains_raw(p) && self.domain.distance_raw(p) >= self.clearance
    }

    fn uniform<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.domain
            .sample_uniform(rng, self.clearance, 1_000_000)
            .ok_or_else(|| Error::InfeasibleClearance { domain: self.domain.to_string(), clearance: self.clearance })
    }

    fn hugging<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..64 {
            let depth = log_uniform(rng, -6.0, -1.0);
            match self.domain.sample_at_depth(rng, depth) {
                Some(p) if self.accept(&p) => return Ok(p),
                Some(_) => continue,
                None => break,
            }
        }
        self.uniform(rng)
    }

    /// `(x, y, z)` on a common line with `z` between `x` and `y`.
    fn collinear<R: Rng>(&self, rng: &mut R) -> Result<[Vec<f64>; 3]> {
        let n = self.domain.dim();
        for _ in 0..64 {
            let z = self.uniform(rng)?;
            let u = match self.domain {
                // The only boundary point is the origin; aim the line at it.
                Domain::PuncturedSpace { .. } => {
                    let r = point::norm(&z);
                    z.iter().map(|c| -c / r).collect()
                }
                _ => domains::random_direction(rng, n),
            };
            let back: Vec<f64> = u.iter().map(|c| -c).collect();
            let t_fwd = self.domain.ray_exit(&z, &u, self.diameter);
            let t_back = self.domain.ray_exit(&z, &back, self.diameter);
            let s_fwd = t_fwd * (1.0 - log_uniform(rng, -6.0, 0.0));
            let s_back = t_back * (1.0 - log_uniform(rng, -6.0, 0.0));
            let x: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + s_fwd * b).collect();
            let y: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a - s_back * b).collect();
            if self.accept(&x) && self.accept(&y) && x != z && y != z {
                return Ok([x, y, z]);
            }
        }
        Ok([self.uniform(rng)?, self.uniform(rng)?, self.uniform(rng)?])
    }

    fn triple(&self, seed: u64, index: usize) -> Result<[Point; 3]> {
        let mut rng = sample_rng(seed, index);
        let [x, y, z] = match Strategy::of(index) {
            Strategy::Uniform => [self.uniform(&mut rng)?, self.uniform(&mut rng)?, self.uniform(&mut rng)?],
            Strategy::Hugging => [self.hugging(&mut rng)?, self.hugging(&mut rng)?, self.hugging(&mut rng)?],
            Strategy::Collinear => self.collinear(&mut rng)?,
        };
        Ok([Point::from_raw(x), Point::from_raw(y), Point::from_raw(z)])
    }

    fn pair(&self, seed: u64, index: usize) -> Result<(Point, Point)> {
        let [x, y, _] = self.triple(seed, index)?;
        Ok((x, y))
    }
}

/// Uniform pairs with the clearance and separation limits of `controls`,
/// for the routines that run the grid estimator.
fn k_pair(domain: &Domain, controls: &KControls, seed: u64, index: usize) -> Result<(Point, Point)> {
    let mut rng = sample_rng(seed, index);
    let infeasible = || Error::InfeasibleClearance { domain: domain.to_string(), clearance: controls.min_clearance };
    for _ in 0..100_000 {
        let x = domain.sample_uniform(&mut rng, controls.min_clearance, 100_000).ok_or_else(infeasible)?;
        let y = domain.sample_uniform(&mut rng, controls.min_clearance, 100_000).ok_or_else(infeasible)?;
        let sep = point::distance(&x, &y);
        if sep > 0.0 && sep <= controls.max_separation {
            return Ok((Point::from_raw(x), Point::from_raw(y)));
        }
    }
    Err(Error::InvalidParameter(format!("no pairs within separation {} on {domain}", controls.max_separation)))
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok(())
}

fn evaluate_all<F>(count: usize, f: F) -> Result<Vec<Evaluated>>
where
    F: Fn(usize) -> Result<Evaluated> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Samples `triple_count` triples and reports the minimum of
/// `m(x,z) + m(z,y) − m(x,y)`.
///
/// For the quasihyperbolic estimate the slack is divided by `m(x,y)` and
/// the tolerance is relative.
pub fn triangle_scan(domain: &Domain, metric: MetricKind, params: MetricParams, triple_count: usize, seed: u64) -> Result<Scan> {
    check_count(triple_count)?;
    metric.check_domain(domain)?;
    let sampler = TripleSampler::new(domain);
    let eval = |i: usize| -> Result<Evaluated> {
        let [x, y, z] = match metric {
            MetricKind::QuasiHyperbolic(k) => {
                let (x, y) = k_pair(domain, &k, seed, i)?;
                let (z, _) = k_pair(domain, &k, seed.wrapping_add(1), i)?;
                [x, y, z]
            }
            _ => sampler.triple(seed, i)?,
        };
        let xy = metric.evaluate(domain, params, &x, &y)?;
        let xz = metric.evaluate(domain, params, &x, &z)?;
        let zy = metric.evaluate(domain, params, &z, &y)?;
        let mut slack = xz + zy - xy;
        if matches!(metric, MetricKind::QuasiHyperbolic(_)) && xy > 0.0 {
            slack /= xy;
        }
        Ok(Evaluated::new(i, slack, vec![x, y, z]))
    };
    let tolerance = match metric {
        MetricKind::QuasiHyperbolic(_) => ESTIMATOR_TOLERANCE,
        _ => CLOSED_FORM_TOLERANCE,
    };
    let header = ReportHeader { suite_id: format!("triangle:{}", metric.name()), domain, params, seed, tolerance };
    reduce(header, evaluate_all(triple_count, eval)?, None, None)
}

/// A violation of `2·h(0, r·e₁) ≥ h(−r·e₁, r·e₁)` in the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollinearViolation {
    pub r: f64,
    /// `2·h(0, r·e₁)`
    pub lhs: f64,
    /// `h(−r·e₁, r·e₁)`
    pub rhs: f64,
}

/// Default radius grid: steps of `1e-3` up to `0.999`, then nine points per
/// decade toward 1, ending at `1 − 1e-8`.
pub fn default_r_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..1000).map(|k| k as f64 / 1000.0).collect();
    for m in 3..8 {
        let step = 10f64.powi(-(m + 1));
        grid.extend((1..10).rev().map(|j| 1.0 - j as f64 * step));
    }
    grid
}

/// Radius beyond which the collinear triple `(−r, 0, r)` in `𝔹²` violates
/// the triangle inequality for `h_{𝔹²,c}`: `1 − ((2−c)/c)²` for
/// `1 < c < 2`, every radius for `c ≤ 1`, none for `c ≥ 2`.
pub fn collinear_threshold(c: f64) -> Option<f64> {
    if c >= 2.0 {
        None
    } else if c <= 1.0 {
        Some(0.0)
    } else {
        Some(1.0 - ((2.0 - c) / c).powi(2))
    }
}

/// Smallest grid radius `r` with `2·h_{𝔹²,c}(0, r) < h_{𝔹²,c}(−r, r)`.
pub fn collinear_c_scan(c: f64, r_grid: &[f64]) -> Result<Option<CollinearViolation>> {
    let params = MetricParams::new(c)?;
    if let Some(r) = r_grid.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::InvalidParameter(format!("grid radius {r} outside (0, 1)")));
    }
    let disk = Domain::ball(2)?;
    let origin = Point::origin(2);
    let mut found: Option<CollinearViolation> = None;
    for &r in r_grid {
        if found.is_some_and(|f| f.r <= r) {
            continue;
        }
        let right = Point::on_axis(2, 0, r);
        let left = Point::on_axis(2, 0, -r);
        let lhs = 2.0 * metrics::h_metric(&disk, params, &origin, &right)?;
        let rhs = metrics::h_metric(&disk, params, &left, &right)?;
        if lhs < rhs {
            found = Some(CollinearViolation { r, lhs, rhs });
        }
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiWitness {
    pub t: f64,
    /// `φ(t·e₁, 0) + φ(0, −t·e₁)`
    pub lhs: f64,
    /// `φ(t·e₁, −t·e₁)`
    pub rhs: f64,
}

/// First `t` of the grid (in the given order) with
/// `2·φ_{𝔹²}(t·e₁, 0) < φ_{𝔹²}(t·e₁, −t·e₁)`.
pub fn phi_triangle_counterexample(t_grid: &[f64]) -> Result<PhiWitness> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    let disk = Domain::ball(2)?;
    let origin = Point::origin(2);
    for &t in t_grid {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!("grid value {t} outside (0, 1)")));
        }
        let x = Point::on_axis(2, 0, t);
        let y = Point::on_axis(2, 0, -t);
        let lhs = metrics::phi_quantity(&disk, &x, &origin)? + metrics::phi_quantity(&disk, &origin, &y)?;
        let rhs = metrics::phi_quantity(&disk, &x, &y)?;
        if lhs < rhs {
            return Ok(PhiWitness { t, lhs, rhs });
        }
    }
    Err(Error::NoViolationFound)
}

/// The comparison inequalities that [`inequality_suite`] can check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    /// `√(2(cosh ρ_ℍ − 1)) = (e^h − 1)/c` on `ℍⁿ`.
    HalfSpaceIdentity,
    /// `sinh(ρ_𝔹/2) ≤ (e^h − 1)/c ≤ 2 sinh(ρ_𝔹/2)` on `𝔹ⁿ`.
    BallSandwich,
    /// `h(g x, g y) ≤ 2 h(x, y)` for automorphisms `g` of `𝔹ⁿ`.
    AutomorphismDistortion,
    /// `h_ℍ(g x, g y) ≤ 2 h_𝔹(x, y)` for Möbius `g: 𝔹ⁿ → ℍⁿ`.
    CayleyDistortion,
    /// `ct/(2(1+c)) < log(1 + 2c sinh(t/2)) < ct` for `c ≥ 1/2`.
    ComparisonBounds,
    /// `j/2 ≤ φ ≤ 2j`.
    PhiJChain,
    /// `j/2 ≤ h_{D,1} ≤ φ ≤ 2h_{D,1} ≤ 2j`.
    JHPhiChain,
    /// `|d(x) − d(y)| ≤ |x − y|` for `d = d_D` and `d = dist(·, A)`.
    BoundaryLipschitz,
    /// `c/(2(1+c)) j ≤ log(1 + 2c sinh(j/2)) ≤ h ≤ c j`.
    HJComparison,
    /// `(1−λ)/(1+λ) j(x, y) ≤ h(x, y)` for `|x − y| < λ d(x)`.
    LocalHJLower,
    /// `d·k ≤ h ≤ c·k` with `d = c/(2(1+c)Û)`.
    KSandwich,
    /// `h/c ≤ ρ ≤ 2h` on `𝔹ⁿ` and `ℍⁿ` for `c ≥ 2`.
    HRhoComparison,
    /// `k ≥ j`.
    KDominatesJ,
}

const SUITE_NAMES: [(Suite, &str, &str); 13] = [
    (Suite::HalfSpaceIdentity, "halfspace-identity", "P2_3_1"),
    (Suite::BallSandwich, "ball-sandwich", "P2_3_2"),
    (Suite::AutomorphismDistortion, "automorphism-distortion", "L2_5"),
    (Suite::CayleyDistortion, "cayley-distortion", "L2_7"),
    (Suite::ComparisonBounds, "comparison-bounds", "P2_8"),
    (Suite::PhiJChain, "phi-j-chain", "L2_9"),
    (Suite::JHPhiChain, "j-h-phi-chain", "C2_10"),
    (Suite::BoundaryLipschitz, "boundary-lipschitz", "L3_1"),
    (Suite::HJComparison, "h-j-comparison", "L4_4_1"),
    (Suite::LocalHJLower, "local-h-j-lower", "L4_4_2"),
    (Suite::KSandwich, "k-sandwich", "C4_5"),
    (Suite::HRhoComparison, "h-rho-comparison", "T4_6"),
    (Suite::KDominatesJ, "k-dominates-j", "QHJ"),
];

impl Suite {
    pub fn all() -> impl Iterator<Item = Suite> {
        SUITE_NAMES.iter().map(|(s, _, _)| *s)
    }

    pub fn name(&self) -> &'static str {
        SUITE_NAMES.iter().find(|(s, _, _)| s == self).map(|(_, n, _)| *n).expect("every suite is named")
    }

    /// Short identifier accepted as an alias on the command line.
    pub fn short_id(&self) -> &'static str {
        SUITE_NAMES.iter().find(|(s, _, _)| s == self).map(|(_, _, a)| *a).expect("every suite is named")
    }

    /// Whether the suite runs the grid estimator.
    pub fn uses_estimator(&self) -> bool {
        matches!(self, Suite::KSandwich | Suite::KDominatesJ)
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Suite::HalfSpaceIdentity | Suite::BallSandwich => IDENTITY_TOLERANCE,
            Suite::BoundaryLipschitz => LIPSCHITZ_TOLERANCE,
            Suite::KSandwich | Suite::KDominatesJ => ESTIMATOR_TOLERANCE,
            _ => CLOSED_FORM_TOLERANCE,
        }
    }

    pub fn check_applicable(&self, domain: &Domain, params: MetricParams) -> Result<()> {
        let not = |what: String| Err(Error::NotApplicable { what, domain: domain.to_string() });
        let ball = matches!(domain, Domain::UnitBall { .. });
        let half = matches!(domain, Domain::HalfSpace { .. });
        match self {
            Suite::HalfSpaceIdentity if !half => not(format!("suite {}", self.name())),
            Suite::BallSandwich | Suite::AutomorphismDistortion | Suite::CayleyDistortion if !ball => not(format!("suite {}", self.name())),
            Suite::HRhoComparison if !(ball || half) => not(format!("suite {}", self.name())),
            Suite::HRhoComparison if params.c < 2.0 => not(format!("suite {} with c = {} < 2", self.name(), params.c)),
            Suite::ComparisonBounds if params.c < 0.5 => not(format!("suite {} with c = {} < 1/2", self.name(), params.c)),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SUITE_NAMES
            .iter()
            .find(|(_, name, alias)| *name == s || alias.eq_ignore_ascii_case(s))
            .map(|(suite, _, _)| *suite)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// Seeded centers of the automorphisms used by the distortion suites, kept
/// at `|a| ≤ 0.95`.
pub fn distortion_centers(dim: usize, seed: u64) -> Result<Vec<Point>> {
    domains::sample_interior(&Domain::ball(dim)?, DISTORTION_MAPS, seed ^ 0x6d6f_6269_7573, 0.05)
}

/// Outside points for the set-distance half of the Lipschitz suite.
fn outside_set(domain: &Domain, seed: u64) -> Option<PointSet> {
    if let Domain::PuncturedSpace { dim } = domain {
        return PointSet::new(domain, vec![Point::origin(*dim)]).ok();
    }
    let (lo, hi) = domain.sampling_window();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0075_7473_6964);
    let mut pts = Vec::new();
    for _ in 0..10_000 {
        let p: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| {
                let w = h - l;
                l - 0.5 * w + 2.0 * w * rng.random::<f64>()
            })
            .collect();
        if !domain.contains_raw(&p) {
            pts.push(Point::from_raw(p));
            if pts.len() == 8 {
                break;
            }
        }
    }
    PointSet::new(domain, pts).ok()
}

/// `h(x, y) − (1−λ)/(1+λ)·j(x, y)`, requiring `|x − y| < λ·d(x)`.
pub fn local_h_j_lower_slack(domain: &Domain, params: MetricParams, x: &Point, y: &Point, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("λ must lie in (0, 1), got {lambda}")));
    }
    let dx = domain.boundary_distance(x)?;
    if x.distance(y)? >= lambda * dx {
        return Err(Error::InvalidParameter(format!("y is not within λ·d(x) = {} of x", lambda * dx)));
    }
    let h = metrics::h_metric(domain, params, x, y)?;
    let j = metrics::j_metric(domain, x, y)?;
    Ok(h - (1.0 - lambda) / (1.0 + lambda) * j)
}

/// Runs one comparison suite over `pair_count` seeded samples. `k` controls
/// the grid estimator for the suites that use it and is ignored otherwise.
pub fn inequality_suite(suite: Suite, domain: &Domain, params: MetricParams, pair_count: usize, seed: u64, k: &KControls) -> Result<Scan> {
    check_count(pair_count)?;
    suite.check_applicable(domain, params)?;
    if suite.uses_estimator() {
        k.validate()?;
    }
    let c = params.c;
    let sampler = TripleSampler::new(domain);
    let mut header = ReportHeader { suite_id: suite.name().to_string(), domain, params, seed, tolerance: suite.default_tolerance() };
    let scaled = |slack: f64, magnitude: f64| slack / magnitude.abs().max(1.0);

    match suite {
        Suite::HalfSpaceIdentity => {
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let rho = metrics::rho_halfspace(&x, &y)?;
                // √(2(cosh ρ − 1)) = 2 sinh(ρ/2), free of cancellation
                let lhs = 2.0 * (rho / 2.0).sinh();
                let rhs = metrics::h_metric(domain, params, &x, &y)?.exp_m1() / c;
                Ok(Evaluated::new(i, scaled(-(lhs - rhs).abs(), rhs), vec![x, y]))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, None)
        }
        Suite::BallSandwich => {
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let s = (metrics::rho_ball(&x, &y)? / 2.0).sinh();
                let u = metrics::h_metric(domain, params, &x, &y)?.exp_m1() / c;
                Ok(Evaluated::new(i, scaled((u - s).min(2.0 * s - u), u), vec![x, y]))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, None)
        }
        Suite::AutomorphismDistortion | Suite::CayleyDistortion => {
            let centers = distortion_centers(domain.dim(), seed)?;
            let cayley = MoebiusMap::ball_to_half_space(domain.dim())?;
            let target = if suite == Suite::CayleyDistortion { Domain::half_space(domain.dim())? } else { domain.clone() };
            let eval = |i: usize| {
                let (x, y) = sampler.pair(seed, i)?;
                let g = MoebiusMap::ball_automorphism(centers[i % centers.len()].clone())?;
                let (mut gx, mut gy) = (moebius::apply(&g, &x)?, moebius::apply(&g, &y)?);
                if suite == Suite::CayleyDistortion {
                    gx = moebius::apply(&cayley, &gx)?;
                    gy = moebius::apply(&cayley, &gy)?;
                }
                let before = metrics::h_metric(domain, params, &x, &y)?;
                let after = metrics::h_metric(&target, params, &gx, &gy)?;
                let ratio = if before > 0.0 { after / before } else { 0.0 };
                Ok(Evaluated::new(i, 2.0 * before - after, vec![x, y]).ratio(ratio))
            };
            reduce(header, evaluate_all(pair_count, eval)?, Some("max_ratio"), None)
        }
        Suite::ComparisonBounds => {
            let (lo, hi) = (1e-6f64.ln(), 50f64.ln());
            let eval = |i: usize| {
                let frac = if pair_count == 1 { 0.0 } else { i as f64 / (pair_count - 1) as f64 };
                let t = (lo + (hi - lo) * frac).exp();
                let f = metrics::comparison_f(t, c)?;
                let slack = (f - c * t / (2.0 * (1.0 + c))).min(c * t - f);
                Ok(Evaluated::new(i, slack, vec![Point::from_raw(vec![t])]))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, None)
        }
        Suite::PhiJChain => {
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let phi = metrics::phi_quantity(domain, &x, &y)?;
                let j = metrics::j_metric(domain, &x, &y)?;
                let ratio = if j > 0.0 { phi / j } else { 1.0 };
                Ok(Evaluated::new(i, (phi - j / 2.0).min(2.0 * j - phi), vec![x, y]).ratio(ratio))
            };
            reduce(header, evaluate_all(pair_count, eval)?, Some("max_ratio"), None)
        }
        Suite::JHPhiChain => {
            let one = MetricParams { c: 1.0 };
            header.params = one;
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let j = metrics::j_metric(domain, &x, &y)?;
                let h = metrics::h_metric(domain, one, &x, &y)?;
                let phi = metrics::phi_quantity(domain, &x, &y)?;
                let chain = [j / 2.0, h, phi, 2.0 * h, 2.0 * j];
                let slack = chain.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                Ok(Evaluated::new(i, slack, vec![x, y]))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, None)
        }
        Suite::BoundaryLipschitz => {
            let set = outside_set(domain, seed);
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let rho = point::distance(x.coords(), y.coords());
                let (dx, dy) = (domain.boundary_distance(&x)?, domain.boundary_distance(&y)?);
                let mut slack = rho - (dx - dy).abs();
                if let Some(a) = &set {
                    let (ax, ay) = (domains::distance_to_set(&x, a)?, domains::distance_to_set(&y, a)?);
                    slack = slack.min(rho - (ax - ay).abs());
                }
                Ok(Evaluated::new(i, slack, vec![x, y]))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, None)
        }
        Suite::HJComparison => {
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let j = metrics::j_metric(domain, &x, &y)?;
                let h = metrics::h_metric(domain, params, &x, &y)?;
                let f = metrics::comparison_f(j, c)?;
                let chain = [c / (2.0 * (1.0 + c)) * j, f, h, c * j];
                let slack = chain.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                Ok(Evaluated::new(i, slack, vec![x, y]))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, None)
        }
        Suite::LocalHJLower => {
            let eval = |i| {
                let (x, _) = sampler.pair(seed, i)?;
                let mut rng = sample_rng(seed ^ 0x6c61_6d62_6461, i);
                let lambda = loop {
                    let l: f64 = rng.random();
                    if l > 0.0 {
                        break l;
                    }
                };
                let dx = domain.boundary_distance(&x)?;
                let n = domain.dim();
                let radius = lambda * dx * rng.random::<f64>().powf(1.0 / n as f64);
                let u = domains::random_direction(&mut rng, n);
                let y = Point::from_raw(x.coords().iter().zip(&u).map(|(a, b)| a + radius * b).collect());
                let slack = local_h_j_lower_slack(domain, params, &x, &y, lambda)?;
                Ok(Evaluated::new(i, slack, vec![x, y]).scalar(lambda))
            };
            reduce(header, evaluate_all(pair_count, eval)?, None, Some("lambda"))
        }
        Suite::HRhoComparison => {
            let ball = matches!(domain, Domain::UnitBall { .. });
            let eval = |i| {
                let (x, y) = sampler.pair(seed, i)?;
                let rho = if ball { metrics::rho_ball(&x, &y)? } else { metrics::rho_halfspace(&x, &y)? };
                let h = metrics::h_metric(domain, params, &x, &y)?;
                let ratio = if h > 0.0 { rho / h } else { 0.0 };
                Ok(Evaluated::new(i, (rho - h / c).min(2.0 * h - rho), vec![x, y]).ratio(ratio))
            };
            reduce(header, evaluate_all(pair_count, eval)?, Some("max_ratio"), None)
        }
        Suite::KDominatesJ => {
            let eval = |i| {
                let (x, y) = k_pair(domain, k, seed, i)?;
                let kv = quasihyperbolic::k_estimate(domain, &x, &y, k)?.value;
                let j = metrics::j_metric(domain, &x, &y)?;
                Ok(Evaluated::new(i, (kv - j) / j, vec![x, y]).ratio(kv / j))
            };
            reduce(header, evaluate_all(pair_count, eval)?, Some("max_ratio"), None)
        }
        Suite::KSandwich => {
            let u_hat = uniformity_estimate(domain, pair_count, seed ^ 0x0075_6e69_666f, k)?.u_hat;
            let d = c / (2.0 * (1.0 + c) * u_hat);
            let eval = |i| {
                let (x, y) = k_pair(domain, k, seed, i)?;
                let kv = quasihyperbolic::k_estimate(domain, &x, &y, k)?.value;
                let h = metrics::h_metric(domain, params, &x, &y)?;
                let slack = ((h - d * kv) / h).min((c * kv - h) / h);
                Ok(Evaluated::new(i, slack, vec![x, y]))
            };
            let mut scan = reduce(header, evaluate_all(pair_count, eval)?, None, None)?;
            scan.report.details.insert("u_hat".into(), u_hat);
            scan.report.details.insert("d".into(), d);
            Ok(scan)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityEstimate {
    pub u_hat: f64,
    pub sample_count: usize,
    pub worst_pair: (Point, Point),
}

/// `Û = max k/j` over seeded pairs with `j > 1e-6`, at least 1.
pub fn uniformity_estimate(domain: &Domain, pair_count: usize, seed: u64, k: &KControls) -> Result<UniformityEstimate> {
    check_count(pair_count)?;
    k.validate()?;
    let ratios: Vec<Option<(f64, Point, Point)>> = (0..pair_count)
        .into_par_iter()
        .map(|i| {
            let (x, y) = k_pair(domain, k, seed, i)?;
            let j = metrics::j_metric(domain, &x, &y)?;
            if j <= MIN_J {
                return Ok(None);
            }
            let kv = quasihyperbolic::k_estimate(domain, &x, &y, k)?.value;
            Ok(Some((kv / j, x, y)))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, Point, Point)> = None;
    let mut used = 0;
    for (ratio, x, y) in ratios.into_iter().flatten() {
        used += 1;
        if best.as_ref().is_none_or(|b| ratio > b.0) {
            best = Some((ratio, x, y));
        }
    }
    let (ratio, x, y) = best.ok_or_else(|| Error::Degenerate("every sampled pair has j below 1e-6".into()))?;
    Ok(UniformityEstimate { u_hat: ratio.max(1.0), sample_count: used, worst_pair: (x, y) })
}

/// `m ↦ coef·max{m, m^exponent}`, the shape of the growth estimates for
/// quasiconformal maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub coef: f64,
    pub exponent: f64,
}

impl GrowthBound {
    pub fn new(coef: f64, exponent: f64) -> Result<Self> {
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(Error::InvalidParameter(format!("coefficient must be positive, got {coef}")));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidParameter(format!("exponent must lie in (0, 1], got {exponent}")));
        }
        Ok(GrowthBound { coef, exponent })
    }

    /// If `j_{fG}(fx, fy) ≤ (1/a)·max{j, j^a}` then
    /// `h_{fG,c}(fx, fy) ≤ (1/A)·max{h, h^a}` with `A = a/(2(1+c))`.
    pub fn from_j_growth(a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("a must lie in (0, 1), got {a}")));
        }
        MetricParams::new(c)?;
        Self::new(2.0 * (1.0 + c) / a, a)
    }

    /// From a `k`-growth bound `c₁·max{k^α, k}` on a uniform domain with
    /// constant `U`: coefficient `1/e = 2c₁(1+c)U`, exponent `α`.
    pub fn from_k_growth(c1: f64, alpha: f64, c: f64, u: f64) -> Result<Self> {
        if !(c1 > 0.0 && u >= 1.0) {
            return Err(Error::InvalidParameter(format!("need c₁ > 0 and U ≥ 1, got {c1}, {u}")));
        }
        MetricParams::new(c)?;
        Self::new(2.0 * c1 * (1.0 + c) * u, alpha)
    }

    pub fn bound(&self, m: f64) -> f64 {
        self.coef * m.max(m.powf(self.exponent))
    }
}

/// Checks `target(x, y) ≤ bound(source(x, y))` on every pair. `target`
/// receives the source pair and is responsible for mapping it.
#[allow(clippy::too_many_arguments)]
pub fn check_growth_bound<S, T>(
    label: &str,
    domain: &Domain,
    params: MetricParams,
    seed: u64,
    bound: GrowthBound,
    pairs: &[(Point, Point)],
    source: S,
    target: T,
) -> Result<Scan>
where
    S: Fn(&Point, &Point) -> Result<f64> + Sync,
    T: Fn(&Point, &Point) -> Result<f64> + Sync,
{
    check_count(pairs.len())?;
    let eval = |i: usize| {
        let (x, y) = &pairs[i];
        let m = source(x, y)?;
        let b = bound.bound(m);
        let t = target(x, y)?;
        let ratio = if b > 0.0 { t / b } else { 0.0 };
        Ok(Evaluated::new(i, b - t, vec![x.clone(), y.clone()]).ratio(ratio))
    };
    let header = ReportHeader { suite_id: format!("growth:{label}"), domain, params, seed, tolerance: CLOSED_FORM_TOLERANCE };
    reduce(header, evaluate_all(pairs.len(), eval)?, Some("worst_ratio"), None)
}

/// Seeded sample pairs from the closed-form sampler, for growth checks.
pub fn sample_pairs(domain: &Domain, count: usize, seed: u64) -> Result<Vec<(Point, Point)>> {
    check_count(count)?;
    let sampler = TripleSampler::new(domain);
    (0..count).into_par_iter().map(|i| sampler.pair(seed, i)).collect()
}

/// Seeded pairs obeying the clearance and separation limits of `controls`;
/// the estimator suites draw exactly these pairs for the same seed.
pub fn estimator_pairs(domain: &Domain, controls: &KControls, count: usize, seed: u64) -> Result<Vec<(Point, Point)>> {
    check_count(count)?;
    controls.validate()?;
    (0..count).into_par_iter().map(|i| k_pair(domain, controls, seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const C2: MetricParams = MetricParams { c: 2.0 };

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c).unwrap()
    }

    #[test]
    fn strategy_proportions() {
        let counts = (0..100).fold([0; 3], |mut acc, i| {
            acc[Strategy::of(i) as usize] += 1;
            acc
        });
        assert_eq!(counts, [60, 25, 15]);
    }

    #[test]
    fn sampled_triples_are_interior() {
        for domain in ["ball:2", "halfspace:2", "punctured:2", "interval:0:1", "ball:3"] {
            let d: Domain = domain.parse().unwrap();
            let s = TripleSampler::new(&d);
            for i in 0..200 {
                for q in s.triple(5, i).unwrap() {
                    assert!(d.boundary_distance(&q).unwrap() >= domains::DEFAULT_MIN_CLEARANCE, "{domain} {q}");
                }
            }
        }
    }

    #[test]
    fn collinear_triples_are_collinear_with_z_between() {
        let d = Domain::ball(2).unwrap();
        let s = TripleSampler::new(&d);
        let i = (0..40).find(|i| Strategy::of(*i) == Strategy::Collinear).unwrap();
        let [x, y, z] = s.triple(9, i).unwrap();
        let xz = x.distance(&z).unwrap();
        let zy = z.distance(&y).unwrap();
        assert!((xz + zy - x.distance(&y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn threshold_formula() {
        assert_eq!(collinear_threshold(2.0), None);
        assert_eq!(collinear_threshold(1.0), Some(0.0));
        let t = collinear_threshold(1.9).unwrap();
        assert!((t - (1.0 - 0.00277)).abs() < 1e-5);
    }

    #[test]
    fn collinear_examples() {
        assert_eq!(collinear_c_scan(2.0, &default_r_grid()).unwrap(), None);
        let v = collinear_c_scan(1.9, &[0.999]).unwrap().unwrap();
        assert_eq!(v.r, 0.999);
        // Multiplied through by 1 − r the inequality reads 2/√0.001 + 1.9·0.999/0.001 < 2/0.001.
        let s = 0.001f64.sqrt();
        assert!(2.0 / s + 1.9 * 0.999 / 0.001 < 2.0 / 0.001);
        assert!((2.0 / s + 1.9 * 0.999 / 0.001 - 1961.35).abs() < 0.01);
        assert!(collinear_c_scan(1.0, &[0.9]).unwrap().is_some());
        assert!(collinear_c_scan(1.0, &[1.0]).is_err());
        assert!(collinear_c_scan(0.0, &[0.5]).is_err());
    }

    #[test]
    fn phi_examples() {
        let w = phi_triangle_counterexample(&[0.9]).unwrap();
        assert!((w.lhs - 2.0 * 9.1f64.ln()).abs() < 1e-12);
        assert!((w.rhs - 325f64.ln()).abs() < 1e-12);
        assert!(phi_triangle_counterexample(&[]).is_err());
        assert!(phi_triangle_counterexample(&[1.5]).is_err());
    }

    #[test]
    fn phi_near_zero_is_a_violation() {
        // 2 log(1 + 0.1/√0.9) = 0.200431… < log(1 + 0.2/0.9) = 0.200671…
        let w = phi_triangle_counterexample(&[0.1]).unwrap();
        assert!((w.lhs - 0.200_431).abs() < 1e-6, "{w:?}");
        assert!((w.rhs - 0.200_671).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn phi_none_found_path() {
        // The gap is O(t³) and vanishes in double precision.
        assert_eq!(phi_triangle_counterexample(&[1e-12]), Err(Error::NoViolationFound));
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::all() {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(s.short_id().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn suite_domain_mismatch() {
        let ball = Domain::ball(2).unwrap();
        let half = Domain::half_space(2).unwrap();
        let iv = Domain::interval(0.0, 1.0).unwrap();
        let k = KControls::default();
        assert!(matches!(inequality_suite(Suite::HalfSpaceIdentity, &ball, C2, 10, 0, &k), Err(Error::NotApplicable { .. })));
        assert!(matches!(inequality_suite(Suite::BallSandwich, &half, C2, 10, 0, &k), Err(Error::NotApplicable { .. })));
        assert!(matches!(inequality_suite(Suite::HRhoComparison, &iv, C2, 10, 0, &k), Err(Error::NotApplicable { .. })));
        let c1 = MetricParams { c: 1.0 };
        assert!(matches!(inequality_suite(Suite::HRhoComparison, &ball, c1, 10, 0, &k), Err(Error::NotApplicable { .. })));
    }

    #[test]
    fn local_lower_example() {
        let ball = Domain::ball(2).unwrap();
        let x = p(&[0.0, 0.0]);
        let y = p(&[0.4, 0.0]);
        let lhs = (5f64 / 3.0).ln() / 3.0;
        let rhs = (1.0 + 0.8 / 0.6f64.sqrt()).ln();
        assert!((lhs - 0.170275).abs() < 1e-6);
        assert!((rhs - 0.709412).abs() < 1e-6);
        let slack = local_h_j_lower_slack(&ball, C2, &x, &y, 0.5).unwrap();
        assert!((slack - (rhs - lhs)).abs() < 1e-15);
        assert!(local_h_j_lower_slack(&ball, C2, &x, &p(&[0.6, 0.0]), 0.5).is_err());
    }

    #[test]
    fn growth_bound_constants() {
        let b = GrowthBound::from_j_growth(0.5, 2.0).unwrap();
        assert_eq!(b.coef, 12.0);
        assert_eq!(b.exponent, 0.5);
        assert!(GrowthBound::new(1.0, 1.5).is_err());
        assert!(GrowthBound::new(0.0, 1.0).is_err());
        let e = GrowthBound::from_k_growth(3.0, 0.5, 2.0, 1.5).unwrap();
        assert_eq!(e.coef, 2.0 * 3.0 * 3.0 * 1.5);
    }

    #[test]
    fn identity_growth_has_zero_slack() {
        let ball = Domain::ball(2).unwrap();
        let pairs = sample_pairs(&ball, 200, 4).unwrap();
        let h = |x: &Point, y: &Point| metrics::h_metric(&ball, C2, x, y);
        let scan = check_growth_bound("identity", &ball, C2, 4, GrowthBound::new(1.0, 1.0).unwrap(), &pairs, h, h).unwrap();
        assert!(scan.report.pass);
        assert_eq!(scan.report.min_slack, 0.0);
    }

    #[test]
    fn report_tolerance_override() {
        let ball = Domain::ball(2).unwrap();
        let scan = triangle_scan(&ball, MetricKind::Phi, C2, 2000, 1).unwrap();
        assert!(!scan.report.pass);
        let loose = scan.report.clone().with_tolerance(1e6);
        assert!(loose.pass);
    }

    #[test]
    fn zero_counts_are_rejected() {
        let ball = Domain::ball(2).unwrap();
        assert!(triangle_scan(&ball, MetricKind::H, C2, 0, 1).is_err());
        assert!(inequality_suite(Suite::PhiJChain, &ball, C2, 0, 1, &KControls::default()).is_err());
    }
}
