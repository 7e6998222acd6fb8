use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants fall into three families: invalid input or domain
/// violations, solver failures, and malformed files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} outside ladder range [{start}, {end})")]
    IndexOutOfRange { index: i64, start: i64, end: i64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64, objective: f64 },

    #[error("capacity solve failed on shell {shell}: {source}")]
    Shell {
        shell: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("no point admits a growth certificate at exponent {exponent}; the dimension hypothesis fails at this resolution")]
    NoCertificate { exponent: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical solver rather than of the input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NotConverged { .. } | Error::Infeasible(_) => true,
            Error::Shell { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
