use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A cocycle vanished (or was non-finite) at a point where the
    /// special-flow construction needs to divide by it.
    #[error("degenerate cocycle: {0}")]
    DegenerateCocycle(String),

    /// `to_related` applied to a functional that is already of the
    /// related-to-cocycle kind.
    #[error("functional is already related to a cocycle")]
    AlreadyRelated,

    /// The α-norm integrand fails the tail integrability test.
    #[error("non-integrable combination: {0}")]
    NonIntegrable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
