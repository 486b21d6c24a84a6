use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The optical layout cannot be realized (ordering, missing parts...).
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// A config document failed to parse or validate.
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// The B-wave rules were asked to do something the model forbids.
    #[error("model consistency error: {0}")]
    ModelConsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            msg: msg.into(),
        }
    }
}
