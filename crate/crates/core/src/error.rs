use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("interior node {node} is missing stencil neighbor {offset:?}")]
    MissingNeighbor { node: usize, offset: Vec<i64> },

    #[error("invalid exponent p = {0} (need p >= 1)")]
    InvalidExponent(f64),

    #[error(
        "singular cell at node {node}: integrand {integrand} times weight {weight} is not finite"
    )]
    SingularCell {
        node: usize,
        integrand: f64,
        weight: f64,
    },

    #[error("asymmetric matrix: |a_ij - a_ji| = {0:e}")]
    Asymmetric(f64),

    #[error("non-finite ellipticity at node {node} multiplying a nonzero eigenvalue")]
    NonFiniteEllipticity { node: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate point set: {0}")]
    DegeneratePoints(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    #[error("infeasible degenerate node {node}: all coefficients vanish but f = {rhs}")]
    InfeasibleNode { node: usize, rhs: f64 },

    #[error("solver did not converge in {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("missing analytic Hessian for {0}")]
    MissingHessian(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown name: {0}")]
    Unknown(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
