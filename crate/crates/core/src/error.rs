use thiserror::Error;

/// Errors raised by tensor operations, dispatch, differentiation and capture.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dtype: {0}")]
    InvalidDType(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported on backend `{backend}`: {what}")]
    Unsupported { backend: String, what: String },

    #[error("no backend could be resolved: pass `f`, set a global backend, or supply a tensor argument")]
    NoBackend,

    #[error("ambiguous backend: tensor arguments come from {0:?}")]
    AmbiguousBackend(Vec<String>),

    #[error("state error: {0}")]
    State(String),

    #[error("wrong backend: expected `{expected}`, found `{found}`")]
    WrongBackend { expected: String, found: String },

    #[error("invalid loss: {0}")]
    InvalidLoss(String),

    #[error("no gradient rule for `{0}` on the differentiated path")]
    NoGradRule(String),

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("capture error: {0}")]
    Capture(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
