use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: expected shape {expected:?}, found {found:?}")]
    Shape {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("row {row}, column `{column}`: {reason}")]
    Cell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset too small: need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("operation `{op}` requires a {expected} task")]
    TaskMismatch {
        op: &'static str,
        expected: &'static str,
    },

    #[error("row {row} has no unmasked neighbour candidate")]
    FullyMaskedRow { row: usize },

    #[error("non-finite gradient in parameter `{param}`")]
    NonFiniteGradient { param: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("all {0} search trials failed")]
    AllTrialsFailed(usize),

    #[error("missing metric for method `{method}` on dataset `{dataset}`")]
    MissingCell { method: String, dataset: String },

    #[error("metric direction mismatch between compared methods")]
    DirectionMismatch,

    #[error("t-test needs at least 2 values per sample, got {0}")]
    SampleTooSmall(usize),
}
