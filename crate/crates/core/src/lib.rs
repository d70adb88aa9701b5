//! Hyperbolic-type metrics on proper subdomains of ℝⁿ.
//!
//! The centrepiece is
//!
//! ```text
//! h_{D,c}(x, y) = log(1 + c|x − y| / √(d_D(x) d_D(y)))
//! ```
//!
//! which is a metric on every open `D` with nonempty boundary exactly when
//! `c ≥ 2`. Around it the crate provides the classical comparison metrics
//! (distance ratio `j_D`, hyperbolic `ρ` of the ball and half-space, a grid
//! estimate of the quasihyperbolic `k_G`), the Möbius maps and sample
//! homeomorphisms used by the distortion results, and a seeded verification
//! engine that scans the triangle inequality and the comparison
//! inequalities between these quantities.

pub mod domains;
pub mod error;
pub mod maps;
pub mod metrics;
pub mod moebius;
pub mod point;
pub mod quasihyperbolic;
pub mod verify;

pub use domains::{distance_to_set, sample_interior, Domain, GenericDomain, PointSet};
pub use error::{Error, Result};
pub use metrics::{MetricKind, MetricParams};
pub use moebius::MoebiusMap;
pub use point::Point;
pub use quasihyperbolic::{KControls, KEstimate};
