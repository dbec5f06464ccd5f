use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    // container format
    #[error("bad magic at byte 0: expected \"FSET1\", found {found:?}")]
    BadMagic { found: Vec<u8> },
    #[error("truncated file: need {needed} bytes at offset {offset}, file has {len}")]
    TruncatedFile { offset: u64, needed: u64, len: u64 },
    #[error("meta/section mismatch at byte {offset}: {detail}")]
    MetaSectionMismatch { offset: u64, detail: String },
    #[error("non-finite value in {section} at row {row}, column {col} (byte {offset})")]
    NonFiniteValue {
        section: &'static str,
        row: usize,
        col: usize,
        offset: u64,
    },
    #[error("label {label} at row {row} is outside [0, {n_classes})")]
    LabelOutOfRange { row: usize, label: i64, n_classes: usize },
    #[error("invalid feature set: {0}")]
    InvalidFeatureSet(String),

    // csv
    #[error("csv header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("ragged csv row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("unparsable number {value:?} at row {row}, column {col}")]
    UnparsableNumber { row: usize, col: usize, value: String },

    // centroid model
    #[error("training set has no labels")]
    MissingLabels,
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("feature dimension is zero")]
    DimZero,
    #[error("model schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    // scoring
    #[error("L1 norm of the feature vector is zero; weighted score undefined")]
    ZeroL1Norm,
    #[error("score variant needs non-nearest centroids but the model has a single class")]
    SingleClassNonNearest,
    #[error("method requires logits but none are present")]
    MissingLogits,
    #[error("method requires a training feature set")]
    MissingTrainSet,
    #[error("k = {k} exceeds the {n_train} available training rows")]
    KTooLarge { k: usize, n_train: usize },
    #[error("training feature set is empty")]
    EmptyTrainSet,
    #[error("invalid score config: {0}")]
    InvalidConfig(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    // metrics / tuning
    #[error("score set is empty")]
    EmptyScoreSet,
    #[error("score {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("tpr target {0} is outside (0, 1]")]
    BadTarget(f64),
    #[error("validation set is empty")]
    EmptyValidationSet,
    #[error("invalid tuning grid: {0}")]
    InvalidGrid(String),

    #[error("invalid synth spec: {0}")]
    SpecInvalid(String),
}

/// Failure family, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Format,
    Contract,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Io => 2,
            ErrorKind::Format => 3,
            ErrorKind::Contract => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Io => "io",
            ErrorKind::Format => "format",
            ErrorKind::Contract => "contract",
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } => ErrorKind::Io,
            BadMagic { .. }
            | TruncatedFile { .. }
            | MetaSectionMismatch { .. }
            | NonFiniteValue { .. }
            | LabelOutOfRange { .. }
            | HeaderMismatch(_)
            | RaggedRow { .. }
            | UnparsableNumber { .. }
            | SchemaMismatch(_) => ErrorKind::Format,
            Row { source, .. } => source.kind(),
            _ => ErrorKind::Contract,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        Error::Row {
            row,
            source: Box::new(self),
        }
    }
}
