use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (lag range, shapes).
    #[error("domain error: {0}")]
    Domain(String),

    /// An invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    #[error("insufficient data: n = {n}, need at least n = {min_n} for L = {max_lag} and h_n = n^{beta}")]
    InsufficientData {
        n: usize,
        min_n: usize,
        max_lag: usize,
        beta: f64,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
