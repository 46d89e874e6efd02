use thiserror::Error;

/// Errors raised by the scoring, optimization and evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcasError {
    #[error("empty score window: no quantile is defined")]
    EmptyWindow,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("value {value} outside [0, 1] in {what}")]
    OutOfUnitInterval { what: &'static str, value: f64 },

    #[error("infeasible weight constraint: floor {floor} exceeds dimension {dim}")]
    Infeasible { floor: f64, dim: usize },

    #[error("incomplete batch: {count} of {capacity} rows filled")]
    IncompleteBatch { count: usize, capacity: usize },

    #[error("rank {rank} outside [1, {len}]")]
    RankOutOfRange { rank: usize, len: usize },

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("zero p-value passed to {0}")]
    ZeroPValue(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no normal (label 0) points to compute a false positive rate")]
    NoNormalPoints,

    #[error("precision-recall curve needs both classes present")]
    SingleClass,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, AcasError>;
