use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that could not be decoded. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Well-formed input that breaks a value contract. `line` is 1-based.
    #[error("validation error at line {line}: {msg}")]
    Validation { line: usize, msg: String },

    /// Argument outside the domain of a numeric transform.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model could not be constructed from the given data.
    #[error("model construction error: {0}")]
    Model(String),

    /// Scheme, threshold or model set that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(line: usize, msg: impl Into<String>) -> Self {
        Error::Validation {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Line number for parse and validation errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Parse { line, .. } | Error::Validation { line, .. } => Some(*line),
            _ => None,
        }
    }
}
