use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or invariant-violating input.
    #[error("invalid input: {0}")]
    Input(String),

    /// The operation needs at least one pair of distinct points.
    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("generation failed: {0}")]
    Generation(String),

    /// Two routes or a certificate check disagreed. Always a bug.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn inconsistency(msg: impl Into<String>) -> Self {
        Error::Inconsistency(msg.into())
    }
}
