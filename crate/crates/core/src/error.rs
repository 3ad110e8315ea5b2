use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed game: {0}")]
    InvalidGame(String),

    #[error("unknown game `{name}` (valid: {valid})")]
    UnknownGame { name: String, valid: String },

    #[error("unknown information state `{0}`")]
    UnknownInfoState(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("policy parse error on line {line}: {message}")]
    PolicyParse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}
