use std::io;

use thiserror::Error;

/// Errors produced by the index, the model fitting routines and the
/// benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("key already exists")]
    AlreadyExists,

    #[error("key not found")]
    NotFound,

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("key {key} is outside the domain of the {kernel} kernel")]
    KernelDomain { kernel: String, key: String },

    #[error("kernel rejected: {0}")]
    InvalidKernel(String),

    #[error("keys must be strictly ascending (violation at index {index})")]
    Unsorted { index: usize },

    #[error("duplicate key in input")]
    DuplicateKey,

    #[error("kernel maps distinct keys at index {index} to the same value")]
    KernelTie { index: usize },

    #[error("empty key set")]
    Empty,

    #[error("entry count {len} is too small for {keys} keys")]
    InvalidLength { len: usize, keys: usize },

    #[error("index out of range: {index} >= {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("index is not empty")]
    NotEmpty,

    #[error("invalid range: lower bound exceeds upper bound")]
    InvalidRange,

    #[error("dataset format: {0}")]
    Format(String),

    #[error("workload: {0}")]
    Workload(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
