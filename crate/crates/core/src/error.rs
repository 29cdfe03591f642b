use thiserror::Error;

/// Errors raised by the pricing and CVA pipeline.
#[derive(Debug, Error)]
pub enum CvaError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("exposure profile is empty")]
    EmptyProfile,

    #[error("unknown method `{0}` (expected `c-htfd` or `htfd-htmc`)")]
    UnknownMethod(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CvaError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> CvaError {
    CvaError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
