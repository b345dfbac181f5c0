use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point set is empty")]
    EmptySet,
    #[error("theta modes differ (centroid vs partition)")]
    ModeMismatch,
    #[error("sparsity budget must be nonnegative and finite, got {0}")]
    InvalidSparsity(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("label {label} out of range for K = {k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("K exceeds sample size: K = {k}, n = {n}")]
    TooManyClusters { k: usize, n: usize },
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("coordinate bound M is unknown for this data source")]
    UnknownBound,
    #[error("cell {0} has zero probability mass")]
    ZeroMassCell(usize),
}

pub type Result<T> = std::result::Result<T, SkmError>;
