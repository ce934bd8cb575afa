use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operands live in different generator universes")]
    UniverseMismatch,
    #[error("derivation has no image for generator '{0}'")]
    UndefinedImage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("field '{field}' has bidegree {got:?}, expected {expected:?}")]
    Bidegree {
        field: String,
        expected: (i32, i32),
        got: (i32, i32),
    },
    #[error("algebra error: {0}")]
    Algebra(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parity violation: {0}")]
    Parity(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
