use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid sparse matrix: {0}")]
    InvalidMatrix(String),

    #[error("zero diagonal entry in row {row} ({count} zero rows in total)")]
    ZeroDiagonal { row: usize, count: usize },

    #[error("non-positive diagonal entry {value} in row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },

    #[error("matrix is singular: pivot {pivot:e} in column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("dense solve limited to {cap} rows, matrix has {rows}")]
    TooLarge { rows: usize, cap: usize },

    #[error("connected vertices {i} and {j} have coincident coordinates")]
    CoincidentPoints { i: usize, j: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("row {row} has a negative dropped sum but no retained magnitude to distribute it over")]
    LumpingBreakdown { row: usize },

    #[error("vertex {vertex} is not assigned to an aggregate")]
    IncompleteAggregation { vertex: usize },

    #[error("coarsening stalled at {rows} rows (ratio {ratio:.3}) and the level is too large for the direct solver")]
    CoarseningStalled { rows: usize, ratio: f64 },

    #[error("spectral radius estimate is zero; prolongator damping undefined")]
    DegenerateSpectrum,

    #[error("{quantity} <= 0 at iteration {iteration}: operator or preconditioner is not positive definite")]
    Indefinite {
        iteration: usize,
        quantity: &'static str,
    },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
