use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, field {field}: cannot parse {text:?} as a finite number")]
    NonNumericField {
        line: usize,
        field: usize,
        text: String,
    },
    #[error("input contains no series")]
    EmptyInput,
    #[error("{folds} folds requested for {series} series")]
    FoldCountTooLarge { folds: usize, series: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shapelet of length {shapelet} is longer than series of length {series}")]
    ShapeletLongerThanSeries { shapelet: usize, series: usize },
    #[error("shapelet length band is empty (min {min} > max {max})")]
    BandEmpty { min: usize, max: usize },
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("train and test representations differ ({train} vs {test})")]
    KindMismatch {
        train: &'static str,
        test: &'static str,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("model format: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
