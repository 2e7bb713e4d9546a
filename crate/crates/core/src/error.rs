use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// `I - delta X` is not invertible (or not positive definite where required).
    #[error("singular shift: |delta|·|X| = {product} is not below 1")]
    SingularShift { product: f64 },

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal mass {off})")]
    EigenNotConverged { sweeps: usize, off: f64 },

    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("point {0:?} lies outside the operator domain")]
    PointOutsideDomain(Vec<f64>),

    #[error("no membership sign change along X + tI for |t| <= {t_max}")]
    NoBracket { t_max: f64 },

    #[error("sample count must be at least 1")]
    InvalidCount,

    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),

    #[error("every sample violated delta·|X| < 1")]
    NoAcceptedSamples,

    #[error("ball of radius {radius} around {center:?} leaves the domain")]
    BallOutsideDomain { center: Vec<f64>, radius: f64 },

    #[error("linear coefficient vanishes")]
    ZeroCoefficient,

    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({0}, {1}) lies on a coordinate axis")]
    OnAxis(f64, f64),

    #[error("sampler accepted no touching quadratic")]
    NoTouchingFound,

    #[error("grid function has no positive value")]
    NoPositiveMax,

    #[error("grid function is positive ({value}) at boundary node {node}")]
    BoundaryViolation { node: usize, value: f64 },
}
