use crate::train::TrainReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 2, 3 or 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("division by a jet with zero value")]
    DivisionByZero,

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("non-finite loss (offending parameter index: {index:?})")]
    NonFiniteLoss { index: Option<usize> },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("empty sample set for {0}")]
    EmptySamples(&'static str),

    #[error("incompatible method/scenario pairing: {0}")]
    Incompatible(String),

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("solver did not converge after {iterations} sweeps (last max update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, partial: Box<TrainReport> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
