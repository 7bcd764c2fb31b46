use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factorization cache built for c = {built}, update needs c = {needed}")]
    StaleCache { built: f64, needed: f64 },

    #[error("degenerate target in task {task}: zero spread")]
    DegenerateTarget { task: usize },

    #[error("degenerate feature {feature}: zero standard deviation on training data")]
    DegenerateFeature { feature: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: cannot parse {value:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("task {task} has no rows")]
    EmptyTask { task: usize },

    #[error("task {task} has {rows} rows, too few to split into train/validation/test")]
    TaskTooSmall { task: usize, rows: usize },

    #[error("invalid input data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
