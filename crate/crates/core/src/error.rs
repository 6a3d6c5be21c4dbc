use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("vertex {0} has degree zero")]
    IsolatedVertex(usize),
    #[error("endpoint {vertex} out of range for a graph on {n} vertices")]
    OutOfRange { vertex: usize, n: usize },
    #[error("vertex {0} has no outgoing edges")]
    DanglingVertex(usize),
    #[error("damping factor {0} must lie strictly inside (0, 1)")]
    InvalidDamping(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e}, tolerance {tol:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },
    #[error("odd number of half-edges ({0})")]
    OddStubCount(u64),
    #[error("invalid parameters: {0}")]
    BadParameters(String),
    #[error("no component schedule with at least one circulant exists for n = {n}")]
    UnreachableSchedule { n: usize },
    #[error("degree distribution has infinite mean")]
    InfiniteMean,
    #[error("empty sample")]
    EmptySample,
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
