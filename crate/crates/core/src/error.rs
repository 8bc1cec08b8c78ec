use thiserror::Error;

/// Errors raised by the signature toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("word of degree {degree} exceeds truncation depth {depth}")]
    OutOfDepth { degree: usize, depth: usize },

    #[error("letter {letter} outside alphabet 1..={dim}")]
    InvalidLetter { letter: usize, dim: usize },

    #[error("tensor is not a Lie element: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotLieElement { residual: f64, tolerance: f64 },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("vector field system cannot evaluate brackets of degree {degree}: {available} derivatives declared")]
    Capability { degree: usize, available: usize },

    #[error("integration diverged at substep {substep}")]
    Divergence { substep: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate classification report: {0}")]
    DegenerateReport(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotLieElement { .. } | Error::Divergence { .. } | Error::SolverNonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
