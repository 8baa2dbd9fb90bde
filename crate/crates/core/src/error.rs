use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unknown user {0}")]
    UnknownUser(u32),

    #[error("unknown item {0}")]
    UnknownItem(u32),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("unknown measure '{name}' (valid: {valid})")]
    UnknownMeasure { name: String, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
