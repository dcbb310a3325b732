use thiserror::Error;

/// Errors raised while building discretizations or running solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {x} lies outside the parameter interval [0, 1]")]
    OutOfDomain { x: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spline spaces are not nested: {0}")]
    NotNested(String),

    #[error("singular Jacobian (det = {det:e}) in patch {patch} at ({x}, {y})")]
    SingularJacobian { patch: usize, x: f64, y: f64, det: f64 },

    #[error("interface between patch {patch_a} side {side_a} and patch {patch_b} side {side_b} is not fully matching")]
    PartialMatch {
        patch_a: usize,
        side_a: usize,
        patch_b: usize,
        side_b: usize,
    },

    #[error("non-conforming layout: {0}")]
    NonConforming(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("inconsistent projection: patch values disagree by {0:e}")]
    InconsistentProjection(f64),

    #[error("solver did not converge within {iterations} iterations (relative residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("preconditioner is not positive definite (<z, r> = {0:e})")]
    IndefinitePreconditioner(f64),

    #[error("geometry file line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
