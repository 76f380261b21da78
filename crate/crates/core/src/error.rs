use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a field with {blocks} block(s)")]
    AxisOutOfRange { axis: usize, blocks: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("translation {value} is not an integer multiple of the grid spacing {spacing}")]
    OffGridTranslation { value: f64, spacing: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("zero window")]
    ZeroWindow,

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("not a frame at this truncation: lower bound estimate {lower:e}")]
    NotAFrame { lower: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("arity mismatch: expected {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("invalid exponent {0}: must lie in [1, inf]")]
    InvalidExponent(f64),

    #[error("malformed norm spec: {0}")]
    MalformedNormSpec(String),

    #[error("phase is not linear in its frequency argument: {0}")]
    NonLinearPhase(String),

    #[error("finite-difference check failed: {0}")]
    FiniteDifference(String),

    #[error("not enough usable samples: need at least {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("under-resolved grid: {0}")]
    UnderResolved(String),

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("operation not defined on this domain: {0}")]
    Domain(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
