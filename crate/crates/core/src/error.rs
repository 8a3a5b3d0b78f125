use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid inputs: out-of-range parameters, malformed matrices, bad dimensions.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The requested quantity is undefined for this input (e.g. log of a zero spectral radius).
    #[error("degenerate input: {0}")]
    Degeneracy(String),

    /// A numerical routine failed (overflow, non-finite values, eigensolver failure).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Iterates diverge: no finite solution exists at these parameters.
    #[error("unstable: {message}")]
    Instability {
        message: String,
        /// ln r(V) when known, for diagnosis.
        log_spectral_radius: Option<f64>,
    },

    /// Iteration stopped at `max_iter` before reaching the tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Neither convergence nor clear divergence could be established.
    #[error("indeterminate: {message}")]
    Indeterminate {
        message: String,
        log_spectral_radius: Option<f64>,
        residuals: Vec<f64>,
    },

    /// A required input was not supplied (e.g. a wealth-consumption solution for an EZ model).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A value left the domain where the model is defined (e.g. w <= 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed configuration or data file.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short stable tag, used in CSV status columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Degeneracy(_) => "degeneracy",
            Error::Numerical(_) => "numerical",
            Error::Instability { .. } => "instability",
            Error::Convergence { .. } => "convergence",
            Error::Indeterminate { .. } => "indeterminate",
            Error::Precondition(_) => "precondition",
            Error::Domain(_) => "domain",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
