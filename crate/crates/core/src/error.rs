use thiserror::Error;

/// Errors raised by factorizations, diagnostics and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero pivot encountered in column {col}")]
    ZeroPivot { col: usize },
    #[error("matrix is singular (no usable pivot in column {col})")]
    SingularMatrix { col: usize },
    #[error("zero on the diagonal of a triangular factor at index {index}")]
    ZeroDiagonal { index: usize },
    #[error("matrix is not positive definite (non-positive pivot at index {index})")]
    NotPositiveDefinite { index: usize },
    #[error(
        "power iteration did not converge after {iterations} iterations (estimate {estimate:e})"
    )]
    NonConvergence { estimate: f64, iterations: usize },
    #[error("computed solution vector is zero")]
    ZeroSolutionVector,
    #[error("no componentwise perturbation exists: residual row {row} is nonzero but (|A||x|)_{row} = 0")]
    InfeasiblePerturbation { row: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension {m} is not supported (maximum {max})")]
    UnsupportedDimension { m: usize, max: usize },
    #[error(
        "expected {expected} condition numbers for {betas} stability indicators, got {kappas}"
    )]
    LengthMismatch {
        betas: usize,
        kappas: usize,
        expected: usize,
    },
    #[error("argument {x} is outside the domain of {what}")]
    DomainError { x: f64, what: &'static str },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// `true` for failures of the numerics (singular, indefinite, ...), as
    /// opposed to malformed input or configuration.
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            Error::Parse(_) | Error::Config(_) | Error::DimensionMismatch(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
