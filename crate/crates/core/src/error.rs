use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Exact arithmetic outgrew the digit budget, or a memo/blowup guard tripped.
    #[error("resource limit exceeded at stage {stage}: {detail}")]
    Resource { stage: usize, detail: String },

    /// A spacer value cannot be represented in the schedule's scalar mode.
    #[error("scalar mode error at stage {stage}: {detail}")]
    Mode { stage: usize, detail: String },

    /// A stage or time lies outside what the schedule can produce.
    #[error("out of range: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("cannot parse scalar {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
