use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("row {0} has no nonzero entries")]
    ZeroRow(usize),

    #[error("column {0} has no nonzero entries")]
    ZeroColumn(usize),

    #[error("index {index} out of bounds for size {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error(
        "reference solution violates the system: max residual {residual:e} exceeds {tolerance:e}"
    )]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("row {0} is an inequality; an equality step was requested")]
    KindMismatch(usize),

    #[error("size guard exceeded: {what} ({size} > {limit})")]
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("no selectable rows remain")]
    NothingSelectable,

    #[error("sum tree has zero total weight")]
    ZeroTotalWeight,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "label propagation graph has an unlabeled component with no labeled neighbour (node {0})"
    )]
    DisconnectedComponent(usize),

    #[error("trace has no distance data")]
    MissingDistance,

    #[error("rate ordering violated: {0}")]
    RateOrdering(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
