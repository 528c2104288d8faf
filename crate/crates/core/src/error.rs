use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// The observed facies at `position` (0-based record index) cannot be
    /// matched against the parent sequence while preserving order.
    #[error("borehole `{borehole}` is incompatible with the parent sequence at record {position} (facies {facies})")]
    Incompatible {
        borehole: String,
        position: usize,
        facies: String,
    },

    #[error("infeasible move: {0}")]
    InfeasibleMove(String),

    #[error("matrix is not positive definite even with diagonal jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("conditioning block is singular (condition estimate {condition_estimate:e})")]
    SingularConditioning { condition_estimate: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what}: requested {requested}, limit {limit}; {hint}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("truncation region has vanishing probability ({probability:e})")]
    DegenerateRegion { probability: f64 },

    #[error("orthant probability did not converge for layer {}: error {error:e} > tolerance {tolerance:e}", .layer + 1)]
    NotConverged {
        layer: usize,
        error: f64,
        tolerance: f64,
    },

    #[error("numeric failure in layer {}: {source}", .layer + 1)]
    Layer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for failures originating in linear algebra or numerical integration.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::SingularConditioning { .. }
                | Error::DegenerateRegion { .. }
                | Error::NotConverged { .. }
                | Error::Layer { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
