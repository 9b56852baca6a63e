use thiserror::Error;

/// Errors produced by the dgm-core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("column {column:?} missing from {place}")]
    MissingColumn { column: String, place: String },

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    BadNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column:?}: category {value:?} not in the declared set")]
    UnknownCategory {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column:?}: empty cells are not supported")]
    EmptyCell { row: usize, column: String },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("part {part} has {rows} rows, need at least {needed}")]
    PartTooSmall {
        part: usize,
        rows: usize,
        needed: usize,
    },

    #[error("all synthetic parts must have the same row count")]
    UnequalPartSizes,

    #[error("labels must contain both classes")]
    SingleClassLabels,

    #[error("label column must be binary for AUROC, found {0} categories")]
    NonBinaryLabel(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
