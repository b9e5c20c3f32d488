use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NurbsError {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("parameter {u} outside knot range [{lo}, {hi}]")]
    OutOfDomain { u: f64, lo: f64, hi: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("control point count {points} does not match basis count {basis}")]
    CountMismatch { points: usize, basis: usize },
    #[error("order {0} exceeds the supported maximum")]
    OrderTooHigh(usize),
    #[error("parametric ranges differ: {0}")]
    RangeMismatch(String),
    #[error("unknown evaluation kind `{0}`")]
    UnknownKind(String),
    #[error("anchors {0} and {1} are not strictly ordered inside their supports")]
    CoincidentAnchors(usize, usize),
    #[error("linear solve failed: {0}")]
    Singular(String),
}
