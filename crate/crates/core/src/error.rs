use std::path::PathBuf;

use crate::model::TrainHistory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing column `{column}` in header")]
    MissingColumn { column: String },

    #[error("duplicate drug id `{drug_id}` at row {row}")]
    DuplicateDrugId { drug_id: String, row: usize },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("self pair `{drug_id}` at row {row}")]
    SelfPair { drug_id: String, row: usize },

    #[error("unknown drug `{drug_id}` at row {row}")]
    UnknownDrug { drug_id: String, row: usize },

    #[error("unknown label `{label}` at row {row}")]
    UnknownLabel { label: String, row: usize },

    #[error("ATC code `{code}` is {len} characters, expected 7")]
    AtcLength { code: String, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input")]
    EmptyInput,

    #[error("label {label} has fewer than 2 train/val triples; coverage of both sides is impossible")]
    InfeasibleLabelCoverage { label: usize },

    #[error("token index {index} out of vocabulary of size {size}")]
    IndexOutOfVocab { index: usize, size: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("line {line}: vector has {actual} coordinates, expected {expected}")]
    DimMismatch {
        line: usize,
        expected: usize,
        actual: usize,
    },

    #[error("format error at line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("loss became non-finite in epoch {epoch}")]
    DivergedLoss {
        epoch: usize,
        history: Box<TrainHistory>,
    },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("query drug `{0}` is not in the encoding table")]
    QueryDrugMissing(String),

    #[error("KNN index is empty")]
    EmptyIndex,

    #[error("predictions and golds differ in length ({preds} vs {golds})")]
    LengthMismatch { preds: usize, golds: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            line,
            reason: reason.into(),
        }
    }
}
