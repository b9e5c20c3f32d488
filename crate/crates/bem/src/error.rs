use thiserror::Error;

#[derive(Debug, Error)]
pub enum BemError {
    #[error("kernel evaluated at coincident points")]
    Singular,
    #[error("normal has length {0}, expected 1")]
    NonUnitNormal(f64),
    #[error("invalid material: {0}")]
    Material(String),
    #[error("invalid quadrature configuration: {0}")]
    QuadratureConfig(String),
    #[error("quadrature did not converge with {order} points (change {change:.3e})")]
    Quadrature { order: usize, change: f64, best: Vec<f64> },
    #[error("quadrature failed for row {row}, element {element} of patch {patch}: {source}")]
    Entry {
        row: usize,
        patch: usize,
        element: usize,
        #[source]
        source: Box<BemError>,
    },
    #[error("{} entries failed, first: {}", .0.len(), .0[0])]
    Assembly(Vec<BemError>),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("collocation points {0} and {1} coincide")]
    CoincidentCollocation(usize, usize),
    #[error("unknown refinement strategy '{0}'")]
    UnknownStrategy(String),
    #[error("interpolation of known data on patch {0} is singular")]
    Projection(usize),
    #[error("dense system is singular")]
    SingularSystem,
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Nurbs(#[from] nurbs::NurbsError),
    #[error(transparent)]
    HMatrix(#[from] hmat::HError),
}
