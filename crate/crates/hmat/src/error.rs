use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero pivot in diagonal block at offset {offset}")]
    ZeroPivot { offset: usize },
    #[error("GMRES did not converge in {iterations} iterations (last residual {last:e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },
    #[error("incompatible block structure: {0}")]
    Structure(String),
}
