//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by construction, decomposition, expansion and integration.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A vector cannot be reshaped into a square matrix.
    #[error("vector length {0} is not a perfect square")]
    LengthNotSquare(usize),

    /// An operator that must be hermitian is not, within tolerance.
    #[error("matrix is not hermitian: max |a_ij - conj(a_ji)| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NonHermitianInput { deviation: f64, tolerance: f64 },

    /// Operands do not share a dimension.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A dissipative channel was given a negative rate.
    #[error("negative channel rate {0}")]
    NegativeRate(f64),

    /// Eigendecomposition rejected: the eigenvector matrix is too ill
    /// conditioned for the secular machinery (near-defective generator).
    #[error("defective generator{context}: eigenvector condition estimate {condition:.3e} exceeds {limit:.3e}")]
    DefectiveGenerator {
        condition: f64,
        limit: f64,
        context: String,
    },

    /// A resonant forcing term carries a polynomial prefactor `t^k` with
    /// `k >= 1`; its time average is not finite and the expansion stops.
    #[error("secular component with polynomial prefactor t^{power} in correction {m} at ladder level {level}")]
    PolynomialSecularTerm { power: u32, m: usize, level: usize },

    /// A term or truncation level beyond the built expansion was requested.
    #[error("order {requested} out of range: expansion was built to order {built}")]
    OrderOutOfRange { requested: usize, built: usize },

    /// A solvability-condition level below 1 was requested.
    #[error("invalid truncation level: {0}")]
    InvalidLevel(String),

    /// The analytic closed forms do not cover the requested level.
    #[error("unsupported truncation level for closed-form evaluation: {0}")]
    UnsupportedLevel(String),

    /// The integrator step size collapsed below the resolvable scale.
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// The integrated state left the representable range.
    #[error("non-finite state encountered at t = {t:.6e}")]
    NonFiniteState { t: f64 },

    /// A state failed a physicality precondition.
    #[error("state is not physical: {0}")]
    NotPhysical(String),

    /// A time grid failed validation.
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    /// The LAPACK backend reported a failure.
    #[error("linear algebra backend error: {0}")]
    Backend(String),

    /// A serialized expansion artifact could not be parsed.
    #[error("parse error at line {line}: {message}")]
    ArtifactParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
