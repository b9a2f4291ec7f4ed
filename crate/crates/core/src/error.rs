use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("FST is not deterministic: {0}")]
    NotDeterministic(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },
    #[error("quota not reached: {0}")]
    Quota(String),
    #[error("input is not in the domain of the FST")]
    Undefined,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed encoding row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },
    #[error("encoding does not fit: {0}")]
    Capacity(String),
    #[error("zero-norm vector at position {0}")]
    ZeroNorm(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
