use alloc::string::String;

/// Errors raised by the analysis engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its domain, or indices/dimensions do not match.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The attack parameters describe no physical state.
    #[error("unphysical attack: {0}")]
    Unphysical(String),
    /// A numerical precondition failed (e.g. a matrix that should be
    /// positive definite is not).
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),
    /// The outcome covariance of a measurement is singular.
    #[error("degenerate measurement: {0}")]
    DegenerateMeasurement(String),
    /// A search region contains no admissible point.
    #[error("empty domain: {0}")]
    EmptyDomain(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
