use thiserror::Error;

/// Errors produced by code construction, simulation, training and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code parameters: {0}")]
    InvalidCodeParams(String),
    #[error("invalid parity-check matrix: {0}")]
    InvalidMatrix(String),
    #[error("lifting error: {0}")]
    Lifting(String),
    #[error("alist parse error: {0}")]
    Alist(String),
    #[error("invalid clustering: {0}")]
    Clustering(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("code fingerprint mismatch: policy {policy}, code {code}")]
    FingerprintMismatch { policy: String, code: String },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("policy file error: {0}")]
    PolicyFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
