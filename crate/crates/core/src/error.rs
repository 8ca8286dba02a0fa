use thiserror::Error;

/// Errors raised by the estimators, generators and loaders in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("ill-conditioned covariance: {0}")]
    IllConditionedCovariance(String),

    #[error("solver diverged at epoch {epoch}: {what} became non-finite")]
    Divergence { epoch: usize, what: &'static str },

    #[error("instance too large: {subsets} candidate subsets exceed the limit of {limit}")]
    InstanceTooLarge { subsets: u128, limit: u128 },

    #[error("failed to load {path}: {message}")]
    Load { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
