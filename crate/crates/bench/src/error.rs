use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad config file, override or unknown name; nothing was computed.
    #[error("config error: {0}")]
    Config(String),
    /// Failure after computation started; partial results may exist.
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit code: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            _ => 2,
        }
    }
}

impl From<cofbl::Error> for BenchError {
    fn from(e: cofbl::Error) -> Self {
        BenchError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Runtime(format!("csv: {e}"))
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
