use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible sparsity structure: {0}")]
    Infeasible(String),
    #[error("problem size {size} exceeds dense cap {cap}; use the covariance-free mode")]
    DenseCap { size: usize, cap: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("rank-deficient active subdictionary")]
    RankDeficient,
    #[error("undefined SNR: the noiseless signal is identically zero")]
    ZeroSignal,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
