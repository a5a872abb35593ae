use thiserror::Error;

/// Errors shared across the library.
///
/// Construction errors (`InvalidParameter`, `GridMismatch`) are raised before
/// any numerics run. Evaluation errors carry the offending location so callers
/// can report where a family stopped being defined.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested quantity is not defined at this comoving position,
    /// e.g. a gain profile evaluated where its radicand is negative.
    #[error("quantity undefined at q = {q}: {reason}")]
    InvalidRegion { q: f64, reason: String },

    /// An envelope magnitude fell below the division floor where a
    /// `1/psi^2` style expression was needed.
    #[error("envelope magnitude below floor at q = {q}")]
    DivisionNearZero { q: f64 },

    #[error("quadrature failed over [{a}, {b}]: {reason}")]
    QuadratureFailure { a: f64, b: f64, reason: String },

    /// Total probability too small for a normalised expectation value.
    #[error("field norm {norm} below floor {floor}")]
    NormFloor { norm: f64, floor: f64 },

    /// Trajectory fitting needs at least three distinct sample times.
    #[error("sample times are degenerate: {0}")]
    DegenerateTimes(String),

    /// Amplitudes exceeded the configured ceiling during propagation.
    #[error("field overflow at step {step}: max |psi| = {max_abs} > ceiling {ceiling}")]
    Overflow {
        step: usize,
        max_abs: f64,
        ceiling: f64,
    },

    /// Non-finite amplitudes appeared during propagation.
    #[error("non-finite field at step {step}")]
    NonFinite { step: usize },

    /// The implicit linear solve broke down (vanishing pivot).
    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    /// A residual-ladder comparison could not separate the candidates.
    #[error("adjudication inconclusive: {0}")]
    Inconclusive(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

impl CoreError {
    pub fn invalid_parameter(msg: impl Into<String>) -> Self {
        CoreError::InvalidParameter(msg.into())
    }
}
