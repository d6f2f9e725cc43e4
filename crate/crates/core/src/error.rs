use thiserror::Error;

/// Errors raised by the geometric layer and the numerical drivers built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("level must be a positive integer, got {0}")]
    InvalidLevel(i64),

    #[error("point outside its chart: {0}")]
    InvalidPoint(String),

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error("cycle self-intersects near nodes {0} and {1}")]
    SelfIntersection(usize, usize),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("cycle is not Bohr-Sommerfeld: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotBohrSommerfeld { defect: f64, tol: f64 },

    #[error("tangent pair is attached to a different half-weighted cycle")]
    DetachedPair,

    #[error("deformation step too large: {0}")]
    StepTooLarge(String),

    #[error("point is not critical: residuals ({0:.3e}, {1:.3e})")]
    NotCritical(f64, f64),

    #[error("critical point search did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate fiber: {0}")]
    DegenerateFiber(String),

    #[error("scan resolution too coarse: {0}")]
    ScanTooCoarse(String),

    #[error("quadrature under-resolved: residual {residual:.3e}, try order >= {suggested}")]
    UnderResolved { residual: f64, suggested: usize },

    #[error("function is not quantizable: {0}")]
    NotQuantizable(String),

    #[error("zero section")]
    ZeroSection,

    #[error("unsupported surface for this operation: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
