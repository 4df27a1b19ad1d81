use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("row {row}, column `{column}`: {message}")]
    InvalidValue {
        row: usize,
        column: String,
        message: String,
    },

    #[error("duplicate movie id `{0}`")]
    DuplicateId(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("row id mismatch between feature blocks at row {row}")]
    RowIdMismatch { row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("labels contain a single class: {0}")]
    SingleClass(String),

    #[error("class {class} has {count} members, fewer than {folds} folds")]
    ClassTooSmall {
        class: u8,
        count: usize,
        folds: usize,
    },

    #[error("pipeline used before fit")]
    NotFitted,

    #[error("unknown feature group `{0}`")]
    UnknownGroup(String),

    #[error("empty category `{0}`")]
    EmptyCategory(String),

    #[error("unsupported bundle format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("corrupt bundle: {0}")]
    Corrupt(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
