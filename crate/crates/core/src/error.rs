use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// The regime has no non-repelling fixed ray, so there is no basin.
    #[error("no basin of attraction: {0}")]
    NoBasin(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
