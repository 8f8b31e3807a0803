use thiserror::Error;

/// Errors raised by the benchmark harness.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] rmes_core::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("external objective: {0}")]
    External(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl BenchError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
