//! The two families of Möbius maps used by the distortion checks, plus the
//! absolute ratio (cross ratio) that they preserve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{self, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoebiusMap {
    /// Automorphism of `𝔹ⁿ` sending `a` to the origin.
    BallAutomorphism { a: Point },
    /// Maps `𝔹ⁿ` onto `ℍⁿ`, sending `−eₙ` to `0`, `0` to `eₙ` and `eₙ` to ∞.
    BallToHalfSpace { dim: usize },
    Identity,
}

impl MoebiusMap {
    pub fn ball_automorphism(a: Point) -> Result<Self> {
        if a.norm() >= 1.0 {
            return Err(Error::InvalidParameter(format!("automorphism center {a} must lie in the unit ball")));
        }
        Ok(MoebiusMap::BallAutomorphism { a })
    }

    pub fn ball_to_half_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(MoebiusMap::BallToHalfSpace { dim })
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        apply(self, x)
    }
}

/// Applies `map` to `x`; both ball-based maps require `|x| < 1`.
pub fn apply(map: &MoebiusMap, x: &Point) -> Result<Point> {
    match map {
        MoebiusMap::Identity => Ok(x.clone()),
        MoebiusMap::BallAutomorphism { a } => {
            x.check_dim(a.dim())?;
            require_in_ball(x)?;
            Ok(Point::from_raw(ball_automorphism(a.coords(), x.coords())))
        }
        MoebiusMap::BallToHalfSpace { dim } => {
            x.check_dim(*dim)?;
            require_in_ball(x)?;
            Ok(Point::from_raw(cayley(x.coords())))
        }
    }
}

fn require_in_ball(x: &Point) -> Result<()> {
    if point::norm_sq(x.coords()) < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDomain(x.coords().to_vec()))
    }
}

// T_a(x) = ((1 − |a|²)(x − a) − |x − a|² a) / (1 − 2⟨x, a⟩ + |x|²|a|²)
fn ball_automorphism(a: &[f64], x: &[f64]) -> Vec<f64> {
    let aa = point::norm_sq(a);
    let xx = point::norm_sq(x);
    let xa = point::dot(x, a);
    let diff_sq = point::distance_sq(x, a);
    let denom = 1.0 - 2.0 * xa + xx * aa;
    x.iter()
        .zip(a)
        .map(|(xi, ai)| ((1.0 - aa) * (xi - ai) - diff_sq * ai) / denom)
        .collect()
}

// Inversion in the sphere S(eₙ, √2) takes 𝔹ⁿ to the lower half-space;
// reflecting the last coordinate lands in ℍⁿ. The last coordinate is
// written as (1 − |x|²)/|x − eₙ|² so that it keeps full relative precision
// near the boundary.
fn cayley(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut shifted = x.to_vec();
    shifted[n - 1] -= 1.0;
    let q = point::norm_sq(&shifted);
    let r = point::norm(x);
    let mut y: Vec<f64> = shifted.iter().map(|c| 2.0 * c / q).collect();
    y[n - 1] = (1.0 - r) * (1.0 + r) / q;
    y
}

/// Absolute ratio `|a, b, c, d| = |a−c||b−d| / (|a−b||c−d|)`.
pub fn absolute_ratio(a: &Point, b: &Point, c: &Point, d: &Point) -> Result<f64> {
    let n = a.dim();
    for p in [b, c, d] {
        p.check_dim(n)?;
    }
    let ab = point::distance(a.coords(), b.coords());
    let cd = point::distance(c.coords(), d.coords());
    let ac = point::distance(a.coords(), c.coords());
    let bd = point::distance(b.coords(), d.coords());
    let scale = [ab, cd, ac, bd].into_iter().fold(0.0, f64::max);
    if scale == 0.0 || ab <= 1e-14 * scale || cd <= 1e-14 * scale {
        return Err(Error::Degenerate("absolute ratio needs a ≠ b and c ≠ d".into()));
    }
    Ok((ac * bd) / (ab * cd))
}
