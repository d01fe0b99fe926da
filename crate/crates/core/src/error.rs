use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by construction, solvers, estimators and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge (seed {seed}, stream {stream})")]
    Solver { seed: u64, stream: u64 },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn estimator(msg: impl Into<String>) -> Self {
        Error::Estimator(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Domain(_) => 2,
            Error::Solver { .. } | Error::Estimator(_) | Error::Precision(_) => 3,
            Error::Io(_) | Error::Format(_) => 4,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("{other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return Error::Io(e.into());
        }
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
