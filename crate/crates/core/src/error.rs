use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. negative time).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Malformed or insufficient input data.
    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// The operation was called on an input it does not support.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::Data(_) => "data",
            Error::Shape { .. } => "shape",
            Error::Contract(_) => "contract",
            Error::Numerical(_) => "numerical",
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}
