use thiserror::Error;

use crate::qsim::MAX_QUBITS;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    Size(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("config error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("checkpoint parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(
        "inference failed: rejection budget exhausted after {attempts} draws \
         ({accepted} accepted, acceptance rate {acceptance_rate:.4e})"
    )]
    Inference {
        accepted: usize,
        attempts: usize,
        acceptance_rate: f64,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(index: usize, limit: usize) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(Error::Index { index, limit })
    }
}
