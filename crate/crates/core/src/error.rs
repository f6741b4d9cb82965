use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum BmoError {
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("BMO norm is zero")]
    ZeroNorm,

    #[error("cube at level {level} is deeper than the grid depth {levels}")]
    CubeTooDeep { level: u32, levels: u32 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("integral diverges at this zeta ({zeta} >= {threshold})")]
    Divergent { zeta: f64, threshold: f64 },

    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),
}

impl BmoError {
    pub(crate) fn parse(field: &str, message: impl Into<String>) -> Self {
        BmoError::Parse {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        BmoError::InvalidArgument(message.into())
    }
}

pub type Result<T> = std::result::Result<T, BmoError>;
