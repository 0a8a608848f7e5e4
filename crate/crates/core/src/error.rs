use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("negative mass {value} at {location}")]
    NegativeMass { location: String, value: f64 },

    #[error("total mass is {0}, expected 1")]
    NotNormalized(f64),

    #[error(
        "absolute continuity violated at point {index}: reference mass {mass:e} but divergence numerator {numerator:e}"
    )]
    AbsoluteContinuityViolation {
        index: usize,
        mass: f64,
        numerator: f64,
    },

    #[error("vertex {0} has zero measure")]
    DegenerateVertex(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid times: {0}")]
    InvalidTimes(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Markov chain is not regular")]
    NotRegular,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{value} lies outside the domain [{lo}, {hi}]")]
    DomainError { value: f64, lo: f64, hi: f64 },

    #[error("kernel coefficients sum to {0}, expected 1")]
    CoefficientSum(f64),

    #[error("kernel is negative at scale {scale}: partial sum {partial_sum}")]
    NegativeKernel { scale: usize, partial_sum: f64 },

    #[error("scale {scale} out of range (maximum {max})")]
    ScaleOutOfRange { scale: usize, max: usize },

    #[error("sample grid is not symmetric about 0")]
    AsymmetricGrid,

    #[error("invalid transport map: {0}")]
    InvalidMap(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
