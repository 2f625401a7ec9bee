use thiserror::Error;

use crate::space_saving::UpdateMode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("summary capacity must be at least 1")]
    InvalidCapacity,
    #[error("increment must be positive")]
    ZeroIncrement,
    #[error("summary is in {found:?} mode, operation requires {expected:?}")]
    ModeMismatch {
        expected: UpdateMode,
        found: UpdateMode,
    },
    #[error("unitary-mode summaries only accept increments of 1 (got {0})")]
    UnitaryIncrement(u64),
    #[error("epsilon must lie strictly between 0 and 1 (got {0})")]
    InvalidEpsilon(String),
    #[error("phi must lie strictly between 0 and 1 (got {0})")]
    InvalidPhi(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("value {value} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: u8 },
    #[error("cannot merge an empty list of summaries")]
    EmptyMerge,
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("bound precondition violated: {0}")]
    BoundPrecondition(String),
    #[error("cannot parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },
    #[error("line {line}: {message}")]
    Trace { line: u64, message: String },
    #[error("malformed encoding: {0}")]
    Codec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCapacity => "invalid_capacity",
            Error::ZeroIncrement => "zero_increment",
            Error::ModeMismatch { .. } => "mode_mismatch",
            Error::UnitaryIncrement(_) => "unitary_increment",
            Error::InvalidEpsilon(_) => "invalid_epsilon",
            Error::InvalidPhi(_) => "invalid_phi",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidHierarchy(_) => "invalid_hierarchy",
            Error::ValueOutOfRange { .. } => "value_out_of_range",
            Error::EmptyMerge => "empty_merge",
            Error::Incompatible(_) => "incompatible",
            Error::BoundPrecondition(_) => "bound_precondition",
            Error::Parse { .. } => "parse",
            Error::Trace { .. } => "trace",
            Error::Codec(_) => "codec",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
