use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("non-convex cone: {0}")]
    NonConvex(String),
    #[error("unsupported cap: {0}")]
    UnsupportedCap(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("profile of length {got} does not match grid of size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("radius {value} at node {node} is below the positivity floor")]
    Positivity { node: usize, value: f64 },
    #[error("ellipticity lost: {0}")]
    Ellipticity(String),
    #[error("linear solver breakdown: {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
