//! Sample homeomorphisms and estimators for their distortion.
//!
//! A map that is `L`-bilipschitz for `h_{G,c}` is quasiconformal with linear
//! dilatation `H(f) ≤ L²`. [`bilipschitz_estimate`] measures an empirical
//! `L` over sampled pairs and [`linear_dilatation`] measures
//!
//! ```text
//! H(f, z) = limsup_{r→0} max_{|x−z|=r} |f(x)−f(z)| / min_{|y−z|=r} |f(y)−f(z)|
//! ```
//!
//! at a decreasing sequence of radii, without extrapolating the limit.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{self, Domain};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricParams};
use crate::moebius::{self, MoebiusMap};
use crate::point::{self, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    Identity,
    Moebius { map: MoebiusMap },
    /// `f(x) = |x|^(α−1)·x`, `f(0) = 0`, an automorphism of `𝔹ⁿ`.
    RadialStretch { alpha: f64 },
}

/// A homeomorphism between two domains.
#[derive(Debug, Clone)]
pub struct SampleMap {
    kind: MapKind,
    source: Domain,
    target: Domain,
}

impl SampleMap {
    pub fn identity(domain: Domain) -> Self {
        SampleMap { kind: MapKind::Identity, source: domain.clone(), target: domain }
    }

    /// A Möbius map with its natural source `𝔹ⁿ`; the identity map is taken
    /// on `𝔹^dim`.
    pub fn moebius(map: MoebiusMap, dim: usize) -> Result<Self> {
        let source = Domain::ball(dim)?;
        let target = match &map {
            MoebiusMap::BallAutomorphism { a } => {
                a.check_dim(dim)?;
                Domain::ball(dim)?
            }
            MoebiusMap::BallToHalfSpace { dim: n } => {
                if *n != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: *n });
                }
                Domain::half_space(dim)?
            }
            MoebiusMap::Identity => Domain::ball(dim)?,
        };
        Ok(SampleMap { kind: MapKind::Moebius { map }, source, target })
    }

    pub fn radial_stretch(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("stretch exponent must be positive, got {alpha}")));
        }
        let ball = Domain::ball(dim)?;
        Ok(SampleMap { kind: MapKind::RadialStretch { alpha }, source: ball.clone(), target: ball })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn source(&self) -> &Domain {
        &self.source
    }

    pub fn target(&self) -> &Domain {
        &self.target
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        apply_map(self, x)
    }
}

pub fn apply_map(map: &SampleMap, x: &Point) -> Result<Point> {
    if !map.source.contains(x)? {
        return Err(Error::OutsideDomain(x.coords().to_vec()));
    }
    match &map.kind {
        MapKind::Identity => Ok(x.clone()),
        MapKind::Moebius { map } => moebius::apply(map, x),
        MapKind::RadialStretch { alpha } => {
            let r = x.norm();
            if r == 0.0 {
                return Ok(x.clone());
            }
            let s = r.powf(alpha - 1.0);
            Ok(Point::from_raw(x.coords().iter().map(|c| c * s).collect()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatationEstimate {
    pub z: Point,
    pub radii: Vec<f64>,
    /// Max/min stretch ratio per radius.
    pub ratios: Vec<f64>,
    /// Ratio at the smallest radius.
    pub h_hat: f64,
}

/// Sphere directions: an equiangular grid in the plane, seeded uniform
/// directions in higher dimensions, `±1` on the line.
fn sphere_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let t = TAU * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| domains::random_direction(&mut rng, dim)).collect()
        }
    }
}

pub fn linear_dilatation(map: &SampleMap, z: &Point, radii: &[f64], sphere_samples: usize, seed: u64) -> Result<DilatationEstimate> {
    if sphere_samples < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 sphere samples, got {sphere_samples}")));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("radii must be a nonempty list of positive reals".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly decreasing".into()));
    }
    let clearance = map.source.boundary_distance(z)?;
    if radii[0] >= clearance {
        return Err(Error::InvalidParameter(format!("radius {} reaches the boundary (d = {clearance})", radii[0])));
    }

    // Exact: recomputing |x − z| for x = z + r·u would only add rounding.
    if matches!(map.kind, MapKind::Identity | MapKind::Moebius { map: MoebiusMap::Identity }) {
        let ratios = vec![1.0; radii.len()];
        return Ok(DilatationEstimate { z: z.clone(), radii: radii.to_vec(), ratios, h_hat: 1.0 });
    }

    let fz = apply_map(map, z)?;
    let dirs = sphere_directions(z.dim(), sphere_samples, seed);
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for u in &dirs {
            let x = Point::from_raw(z.coords().iter().zip(u).map(|(a, b)| a + r * b).collect());
            let fx = apply_map(map, &x)?;
            let stretch = point::distance(fx.coords(), fz.coords());
            if stretch == 0.0 {
                return Err(Error::Collision(x.into_coords()));
            }
            lo = lo.min(stretch);
            hi = hi.max(stretch);
        }
        ratios.push(hi / lo);
    }
    let h_hat = *ratios.last().expect("radii nonempty");
    Ok(DilatationEstimate { z: z.clone(), radii: radii.to_vec(), ratios, h_hat })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilipschitzEstimate {
    pub l_hat: f64,
    pub worst_pair: (Point, Point),
    pub sample_count: usize,
}

/// Empirical `L = max max(h'(fx, fy)/h(x, y), h(x, y)/h'(fx, fy))` over
/// seeded source pairs, with `h' = h_{fG,c}` on the target.
pub fn bilipschitz_estimate(map: &SampleMap, params: MetricParams, pair_count: usize, seed: u64) -> Result<BilipschitzEstimate> {
    if pair_count == 0 {
        return Err(Error::InvalidParameter("pair_count must be at least 1".into()));
    }
    let pts = domains::sample_interior(&map.source, 2 * pair_count, seed, domains::DEFAULT_MIN_CLEARANCE)?;
    let mut best: Option<(f64, usize)> = None;
    let mut used = 0;
    for (i, pair) in pts.chunks_exact(2).enumerate() {
        let (x, y) = (&pair[0], &pair[1]);
        if x == y {
            continue;
        }
        let hs = metrics::h_metric(&map.source, params, x, y)?;
        let ht = metrics::h_metric(&map.target, params, &apply_map(map, x)?, &apply_map(map, y)?)?;
        if hs == 0.0 || ht == 0.0 {
            continue;
        }
        used += 1;
        let ratio = (ht / hs).max(hs / ht);
        if best.is_none_or(|(b, _)| ratio > b) {
            best = Some((ratio, i));
        }
    }
    let (l_hat, i) = best.ok_or_else(|| Error::Degenerate("no distinct sample pairs".into()))?;
    Ok(BilipschitzEstimate { l_hat, worst_pair: (pts[2 * i].clone(), pts[2 * i + 1].clone()), sample_count: used })
}

/// `U_G(a, b) = (e^{h_{G,c}(a,b)} − 1)/c`, which equals `|a−b|/√(d(a)d(b))`
/// whatever `c` is.
pub fn u_quantity(domain: &Domain, params: MetricParams, a: &Point, b: &Point) -> Result<f64> {
    Ok(metrics::h_metric(domain, params, a, b)?.exp_m1() / params.c)
}

/// Bracket `[log(1 + ct/√(1+t)), log(1 + ct/√(1−t))]` for `h_{G,c}(w, z)`
/// when `|w−z| = t·d(z)`, since then `(1−t)d(z) ≤ d(w) ≤ (1+t)d(z)`.
/// Pairs `x, y` on that sphere are not bracketed: both boundary distances
/// move, so `ct/(1±t)` replaces `ct/√(1±t)`.
pub fn small_sphere_bracket(t: f64, c: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("t must lie in (0, 1), got {t}")));
    }
    Ok(((c * t / (1.0 + t).sqrt()).ln_1p(), (c * t / (1.0 - t).sqrt()).ln_1p()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c).unwrap()
    }

    const C2: MetricParams = MetricParams { c: 2.0 };

    #[test]
    fn apply_examples() {
        let ball = Domain::ball(2).unwrap();
        let id = SampleMap::identity(ball);
        assert_eq!(id.apply(&p(&[0.3, 0.1])).unwrap(), p(&[0.3, 0.1]));
        let sq = SampleMap::radial_stretch(2.0, 2).unwrap();
        assert_eq!(sq.apply(&p(&[0.5, 0.0])).unwrap(), p(&[0.25, 0.0]));
        assert_eq!(sq.apply(&p(&[0.0, 0.0])).unwrap(), p(&[0.0, 0.0]));
        let one = SampleMap::radial_stretch(1.0, 2).unwrap();
        assert_eq!(one.apply(&p(&[-0.3, 0.7])).unwrap(), p(&[-0.3, 0.7]));
        assert!(sq.apply(&p(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn identity_dilatation_is_one() {
        let id = SampleMap::identity(Domain::ball(2).unwrap());
        let est = linear_dilatation(&id, &p(&[0.2, 0.1]), &[0.1, 0.01, 0.001], 64, 0).unwrap();
        assert!(est.ratios.iter().all(|r| *r == 1.0));
        assert_eq!(est.h_hat, 1.0);
    }

    #[test]
    fn dilatation_argument_checks() {
        let id = SampleMap::identity(Domain::ball(2).unwrap());
        let z = p(&[0.5, 0.0]);
        assert!(linear_dilatation(&id, &z, &[0.1], 8, 0).is_err());
        assert!(linear_dilatation(&id, &z, &[0.01, 0.1], 16, 0).is_err());
        assert!(linear_dilatation(&id, &z, &[0.6], 16, 0).is_err());
        assert!(linear_dilatation(&id, &z, &[], 16, 0).is_err());
    }

    #[test]
    fn collision_is_reported() {
        // 0.1^400 underflows, so the whole sphere lands on f(0) = 0.
        let f = SampleMap::radial_stretch(400.0, 2).unwrap();
        let err = linear_dilatation(&f, &p(&[0.0, 0.0]), &[0.1], 16, 0).unwrap_err();
        assert!(matches!(err, Error::Collision(_)));
    }

    #[test]
    fn u_quantity_examples() {
        let ball = Domain::ball(2).unwrap();
        let a = p(&[0.0, 0.0]);
        assert_eq!(u_quantity(&ball, C2, &a, &a).unwrap(), 0.0);
        let u = u_quantity(&ball, C2, &a, &p(&[0.5, 0.0])).unwrap();
        assert!((u - 0.5f64.sqrt()).abs() < 1e-15);
        let half = Domain::half_space(2).unwrap();
        let u = u_quantity(&half, MetricParams { c: 5.0 }, &p(&[0.0, 1.0]), &p(&[0.0, 2.0])).unwrap();
        assert!((u - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identity_bilipschitz_is_one() {
        let id = SampleMap::identity(Domain::ball(2).unwrap());
        let est = bilipschitz_estimate(&id, C2, 500, 1).unwrap();
        assert!((est.l_hat - 1.0).abs() < 1e-12);
        assert_eq!(est.sample_count, 500);
    }

    #[test]
    fn moebius_map_domains() {
        let g = SampleMap::moebius(MoebiusMap::ball_to_half_space(2).unwrap(), 2).unwrap();
        assert!(matches!(g.target(), Domain::HalfSpace { dim: 2 }));
        assert!(SampleMap::moebius(MoebiusMap::ball_to_half_space(3).unwrap(), 2).is_err());
        assert!(SampleMap::radial_stretch(0.0, 2).is_err());
    }

    #[test]
    fn bracket_is_ordered() {
        let (lo, hi) = small_sphere_bracket(0.1, 2.0).unwrap();
        assert!(0.0 < lo && lo < hi);
        assert!(small_sphere_bracket(1.0, 2.0).is_err());
    }
}
