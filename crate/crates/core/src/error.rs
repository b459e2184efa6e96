use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("section matrix is not symmetric (relative asymmetry {0:.3e})")]
    Asymmetric(f64),

    /// The section operator must have 0 in its resolvent set and `-A` must be
    /// sectorial; for a symmetric matrix that means a strictly negative spectrum.
    #[error(
        "operator hypothesis violated: eigenvalue #{index} = {value:.6e} is not strictly negative \
         (0 must lie in the resolvent set of A and -A must be sectorial)"
    )]
    HypothesisViolation { index: usize, value: f64 },

    #[error("eigendecomposition rejected: {0}")]
    Decomposition(String),

    #[error("operator function is not finite at eigenvalue {mu:.6e}")]
    NonFiniteFunction { mu: f64 },

    #[error("semigroup time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("argument {re} + {im}i lies on the branch cut (-inf, 0]")]
    BranchCut { re: f64, im: f64 },

    #[error("symbol vanishes at the evaluation point")]
    VanishingSymbol,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid too coarse: n_x = {got}, need at least {min}")]
    Resolution { got: usize, min: usize },

    #[error("point x = {x} lies outside [{lo}, {hi}]")]
    OutOfInterval { x: f64, lo: f64, hi: f64 },

    #[error("derivative order {0} not supported (max 3)")]
    DerivativeOrder(usize),

    #[error("numerical anomaly: {0}")]
    Anomaly(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
