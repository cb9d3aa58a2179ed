use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter layout mismatch: {0}")]
    Layout(String),

    #[error("non-finite gradient at index {index} (value {value})")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("non-finite parameter at index {index} after optimizer step")]
    NonFiniteParameter { index: usize },

    #[error("non-finite {what} loss at epoch {epoch} (value {value})")]
    NonFiniteLoss {
        what: &'static str,
        epoch: usize,
        value: f64,
    },

    #[error("idx parse error at byte offset {offset}: {reason}")]
    Idx { offset: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable tag, used by the CLI for machine-readable failures.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Layout(_) => "layout",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::NonFiniteParameter { .. } => "non_finite_parameter",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Idx { .. } => "idx",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
