use skm_core::SkmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl From<SkmError> for CliError {
    fn from(e: SkmError) -> Self {
        use SkmError::*;
        match e {
            TooManyClusters { .. }
            | InstanceTooLarge(_)
            | InvalidSparsity(_)
            | InvalidArgument(_)
            | UnknownBound
            | ModeMismatch => CliError::Config(e.to_string()),
            DimensionMismatch { .. }
            | EmptySet
            | NonFinite(_)
            | EmptyCluster(_)
            | LabelOutOfRange { .. }
            | InvalidData(_)
            | ZeroMassCell(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
