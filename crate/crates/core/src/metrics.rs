//! Closed-form distances on subdomains of ℝⁿ.
//!
//! All of them are functions of `|x − y|` and the boundary distances
//! `d(x) = d_D(x)`, `d(y) = d_D(y)`:
//!
//! ```text
//! h_{D,c}(x, y) = log(1 + c|x−y| / √(d(x)d(y)))
//! j_D(x, y)     = log(1 + |x−y| / min{d(x), d(y)})
//! φ_D(x, y)     = log(1 + max{|x−y|/√(d(x)d(y)), |x−y|²/(d(x)d(y))})
//! ```
//!
//! `h_{D,c}` is a metric exactly when `c ≥ 2`. `φ_D` is comparable to `j_D`
//! but fails the triangle inequality, so it is exposed as
//! [`phi_quantity`] rather than as a metric.
//!
//! Every function returns exactly `0.0` for coincident points without
//! forming the quotients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domains::Domain;
use crate::error::{Error, Result};
use crate::point::{self, Point};
use crate::quasihyperbolic::{self, KControls};

/// The constant `c` of `h_{D,c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub c: f64,
}

impl MetricParams {
    /// Smallest `c` for which `h_{D,c}` is a metric on every domain.
    pub const SHARP_C: f64 = 2.0;

    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be positive and finite, got {c}")));
        }
        Ok(MetricParams { c })
    }

    /// True when `c < 2`, where the triangle inequality can fail.
    pub fn is_subsharp(&self) -> bool {
        self.c < Self::SHARP_C
    }
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { c: Self::SHARP_C }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    H,
    J,
    /// Not a metric; usable as a candidate in triangle scans.
    Phi,
    RhoBall,
    RhoHalfSpace,
    QuasiHyperbolic(KControls),
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::H => "h",
            MetricKind::J => "j",
            MetricKind::Phi => "phi",
            MetricKind::RhoBall => "rho-ball",
            MetricKind::RhoHalfSpace => "rho-halfspace",
            MetricKind::QuasiHyperbolic(_) => "k",
        }
    }

    /// Errors when the metric has no meaning on `domain`.
    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        let ok = match self {
            MetricKind::RhoBall => matches!(domain, Domain::UnitBall { .. }),
            MetricKind::RhoHalfSpace => matches!(domain, Domain::HalfSpace { .. }),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NotApplicable { what: format!("metric {}", self.name()), domain: domain.to_string() })
        }
    }

    pub fn evaluate(&self, domain: &Domain, params: MetricParams, x: &Point, y: &Point) -> Result<f64> {
        self.check_domain(domain)?;
        match self {
            MetricKind::H => h_metric(domain, params, x, y),
            MetricKind::J => j_metric(domain, x, y),
            MetricKind::Phi => phi_quantity(domain, x, y),
            MetricKind::RhoBall => rho_ball(x, y),
            MetricKind::RhoHalfSpace => rho_halfspace(x, y),
            MetricKind::QuasiHyperbolic(k) => Ok(quasihyperbolic::k_estimate(domain, x, y, k)?.value),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "h" => MetricKind::H,
            "j" => MetricKind::J,
            "phi" => MetricKind::Phi,
            "rho-ball" => MetricKind::RhoBall,
            "rho-halfspace" => MetricKind::RhoHalfSpace,
            "k" => MetricKind::QuasiHyperbolic(KControls::default()),
            other => return Err(Error::InvalidParameter(format!("unknown metric '{other}'"))),
        })
    }
}

/// `(|x − y|, d(x), d(y))`, validating dimensions and membership.
fn pair_data(domain: &Domain, x: &Point, y: &Point) -> Result<(f64, f64, f64)> {
    let dx = domain.boundary_distance(x)?;
    let dy = domain.boundary_distance(y)?;
    Ok((point::distance(x.coords(), y.coords()), dx, dy))
}

/// `h_{D,c}(x, y)`.
pub fn h_metric(domain: &Domain, params: MetricParams, x: &Point, y: &Point) -> Result<f64> {
    let (rho, dx, dy) = pair_data(domain, x, y)?;
    h_metric_general(rho, dx, dy, params)
}

/// `log(1 + c·ρ/√(d_A(x)·d_A(y)))` from precomputed distances, where
/// `d_A` is the distance to any nonempty set `A` outside the domain.
/// With `A = ∂D` this is [`h_metric`].
pub fn h_metric_general(rho_xy: f64, d_a_x: f64, d_a_y: f64, params: MetricParams) -> Result<f64> {
    if !(rho_xy >= 0.0 && rho_xy.is_finite()) {
        return Err(Error::InvalidParameter(format!("distance must be nonnegative, got {rho_xy}")));
    }
    if !(d_a_x > 0.0 && d_a_y > 0.0 && d_a_x.is_finite() && d_a_y.is_finite()) {
        return Err(Error::InvalidParameter(format!("clearances must be positive, got {d_a_x}, {d_a_y}")));
    }
    if rho_xy == 0.0 {
        return Ok(0.0);
    }
    Ok((params.c * rho_xy / (d_a_x * d_a_y).sqrt()).ln_1p())
}

/// Distance ratio metric `j_D(x, y)`.
pub fn j_metric(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    let (rho, dx, dy) = pair_data(domain, x, y)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    Ok((rho / dx.min(dy)).ln_1p())
}

/// `φ_D(x, y)`. Symmetric and zero only on the diagonal, but not a metric.
pub fn phi_quantity(domain: &Domain, x: &Point, y: &Point) -> Result<f64> {
    let (rho, dx, dy) = pair_data(domain, x, y)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let prod = dx * dy;
    Ok((rho / prod.sqrt()).max(rho * rho / prod).ln_1p())
}

/// `arcosh(1 + δ)` for `δ ≥ 0`, accurate for small `δ`. Slightly negative
/// `δ` from rounding is clamped to zero.
pub(crate) fn acosh_one_plus(delta: f64) -> f64 {
    let delta = delta.max(0.0);
    (delta + (delta * (2.0 + delta)).sqrt()).ln_1p()
}

fn last_coord_positive(x: &Point) -> Result<f64> {
    let t = x.coords()[x.dim() - 1];
    if t > 0.0 {
        Ok(t)
    } else {
        Err(Error::OutsideDomain(x.coords().to_vec()))
    }
}

/// Hyperbolic distance of the upper half-space `ℍⁿ`:
/// `cosh ρ = 1 + |x−y|²/(2xₙyₙ)`.
pub fn rho_halfspace(x: &Point, y: &Point) -> Result<f64> {
    x.check_dim(y.dim())?;
    let xn = last_coord_positive(x)?;
    let yn = last_coord_positive(y)?;
    if x == y {
        return Ok(0.0);
    }
    let delta = point::distance_sq(x.coords(), y.coords()) / (2.0 * xn * yn);
    Ok(acosh_one_plus(delta))
}

fn ball_conformal_factor(x: &Point) -> Result<f64> {
    let r = x.norm();
    if r < 1.0 {
        Ok((1.0 - r) * (1.0 + r))
    } else {
        Err(Error::OutsideDomain(x.coords().to_vec()))
    }
}

/// Hyperbolic distance of the unit ball `𝔹ⁿ`:
/// `sinh(ρ/2) = |x−y| / √((1−|x|²)(1−|y|²))`.
///
/// The value is cross-checked against the `tanh(ρ/2)` form; disagreement
/// beyond `1e-12` (relative to `max(1, ρ)`) is reported as an error.
pub fn rho_ball(x: &Point, y: &Point) -> Result<f64> {
    x.check_dim(y.dim())?;
    let bx = ball_conformal_factor(x)?;
    let by = ball_conformal_factor(y)?;
    if x == y {
        return Ok(0.0);
    }
    let a = point::distance(x.coords(), y.coords());
    let b_sq = bx * by;
    let sinh_form = 2.0 * (a / b_sq.sqrt()).asinh();

    // tanh(ρ/2) = a/A with A² = a² + b²; 2·artanh(a/A) = log1p(2a(A+a)/b²).
    let big_a = (a * a + b_sq).sqrt();
    let tanh_form = (2.0 * a * (big_a + a) / b_sq).ln_1p();

    if (sinh_form - tanh_form).abs() > 1e-12 * sinh_form.max(1.0) {
        return Err(Error::Numerical(format!("ball distance forms disagree: {sinh_form} vs {tanh_form}")));
    }
    Ok(sinh_form)
}

/// `f(t) = log(1 + 2c·sinh(t/2))`, which satisfies
/// `c·t/(2(1+c)) < f(t) < c·t` for `c ≥ 1/2` and `t > 0`.
pub fn comparison_f(t: f64, c: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    Ok((2.0 * c * (t / 2.0).sinh()).ln_1p())
}
