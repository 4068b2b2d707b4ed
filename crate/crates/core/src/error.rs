//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed volume header: {0}")]
    MalformedHeader(String),

    #[error("unsupported volume format version: {0:?}")]
    UnsupportedVersion(String),

    #[error("payload length mismatch: expected {expected} bytes, found {found}")]
    PayloadLength { expected: usize, found: usize },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("invalid sample stack: {0}")]
    InvalidStack(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column {0:?} in cohort csv")]
    MissingColumn(String),

    #[error("row {row}: column {column:?} has non-numeric value {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: column {column:?} must be 0 or 1, got {value:?}")]
    NonBinaryCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: invalid record: {reason}")]
    InvalidRecord { row: usize, reason: String },

    #[error("duplicate subject id {0:?}")]
    DuplicateSubjectId(String),

    #[error("column {0:?} has zero variance, cannot standardize")]
    ZeroVariance(String),

    #[error("cohort is already standardized; frozen stats are immutable")]
    AlreadyStandardized,

    #[error("ellipsoid does not fit inside the grid: {0}")]
    EllipsoidOutOfBounds(String),

    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),

    #[error("infeasible effect spec: {0}")]
    InfeasibleEffect(String),

    #[error("volume dims mismatch: {0:?} vs {1:?}")]
    DimsMismatch((usize, usize, usize), (usize, usize, usize)),

    #[error("coefficient of variation undefined: no organ voxels in any sample")]
    UndefinedCv,

    #[error("singular design matrix (rank {rank} < {cols} columns)")]
    SingularDesign { rank: usize, cols: usize },

    #[error("invalid design matrix: {0}")]
    InvalidDesign(String),

    #[error("subject {0:?}: confidence missing or non-finite for requested model variant")]
    MissingConfidence(String),

    #[error("model/design column mismatch: fit has {fit:?}, design has {design:?}")]
    ColumnMismatch { fit: Vec<String>, design: Vec<String> },

    #[error("subject ids do not match between stacks and truths: {0}")]
    SubjectIdMismatch(String),

    #[error("degenerate split: could not draw a two-class training set in {0} attempts")]
    DegenerateSplit(usize),

    #[error("report error: {0}")]
    Report(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
