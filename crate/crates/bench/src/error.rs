use harmonia_core::error::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("stationary point at {point:?} (gradient norm {norm:e})")]
    Stationary { point: Vec<f64>, norm: f64 },

    #[error("missing runs: {}", .0.join(", "))]
    MissingRuns(Vec<String>),

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    /// Process exit status: 2 for incompatible pairings, 3 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Core(CoreError::Incompatible(_)) => 2,
            BenchError::Core(CoreError::Diverged { .. }) | BenchError::Core(CoreError::NonFiniteLoss { .. }) => 3,
            _ => 1,
        }
    }
}
