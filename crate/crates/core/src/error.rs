use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),
    #[error("{kind} id {id} out of range (size {size})")]
    OutOfRange {
        kind: &'static str,
        id: usize,
        size: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("non-finite parameter detected in {0}")]
    NonFinite(&'static str),
    #[error("optimizer stopped with gradient norm {grad_norm:e} above tolerance {tol:e}")]
    NotConverged { grad_norm: f64, tol: f64 },
}
