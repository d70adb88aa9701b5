use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("point has a non-finite or missing coordinate")]
    NonFinite,

    #[error("point set is empty")]
    EmptySet,

    #[error("clearance {clearance} is infeasible for domain {domain}")]
    InfeasibleClearance { domain: String, clearance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("grid does not connect the query points")]
    Disconnected,

    #[error("grid needs {required} nodes but the cap is {cap}")]
    NodeBudgetExceeded { required: usize, cap: usize },

    #[error("{what} is not applicable to domain {domain}")]
    NotApplicable { what: String, domain: String },

    #[error("no violation found on the supplied grid")]
    NoViolationFound,

    #[error("map sends {0:?} onto the image of the center point")]
    Collision(Vec<f64>),

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),
}
