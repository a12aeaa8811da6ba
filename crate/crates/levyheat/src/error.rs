use thiserror::Error;

/// Errors raised by every layer of the crate.
///
/// The variants mirror the failure classes callers are expected to
/// distinguish: bad input, an operation a model does not support, a
/// numerical procedure that failed to converge, a theorem hypothesis that
/// does not hold for the supplied parameters, and configuration problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("{}", config_message(.line, .message))]
    Config { line: Option<usize>, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn config_message(line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("configuration error at line {l}: {message}"),
        None => format!("configuration error: {message}"),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn unsupported<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Unsupported(msg.into()))
}

pub(crate) fn numeric<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numeric(msg.into()))
}

pub(crate) fn hypothesis<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Hypothesis(msg.into()))
}
