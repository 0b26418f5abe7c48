use thiserror::Error;

pub type Result<T> = std::result::Result<T, CpwlError>;

#[derive(Debug, Error)]
pub enum CpwlError {
    #[error("layer {layer}: expected input of dimension {expected}, got {got}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("input dimension {dim} exceeds the supported limit of {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("cell budget of {limit} exceeded")]
    BudgetExceeded { limit: usize },

    #[error("linear program anomaly: {0}")]
    Lp(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CpwlError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            CpwlError::Io(_) => 1,
            CpwlError::BudgetExceeded { .. } => 3,
            _ => 2,
        }
    }
}
