//! Crate-wide error type.
//!
//! Every failure carries enough context to name the offending id, line, or
//! attribute, and classifies itself for process exit codes (config vs data vs
//! stage failure).

use thiserror::Error;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration: missing keys, inconsistent parameters.
    Config,
    /// Bad input data: parse failures, dangling references, duplicates.
    Data,
    /// A pipeline stage failed for another reason.
    Stage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("duplicate node id {0}")]
    DuplicateNode(String),

    #[error("edge ({src}) -[{label}]-> ({dst}) references unknown node {missing}")]
    DanglingEdge {
        src: String,
        label: String,
        dst: String,
        missing: String,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("node {0} not found")]
    NodeNotFound(String),

    #[error("table {table}, row {row}: foreign key column {column} value {value:?} does not resolve")]
    UnresolvedForeignKey {
        table: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("table {table} is missing declared column {column}")]
    MissingColumn { table: String, column: String },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("unknown attribute {0} in constraint evaluation")]
    UnknownAttribute(String),

    #[error("constraint cannot be evaluated: {0}")]
    Eval(String),

    #[error("empty corpus: nothing to train on")]
    EmptyCorpus,

    #[error("embedding error: {0}")]
    Embedding(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lsh error: {0}")]
    Lsh(String),

    #[error("no labelled pairs available to learn a dice threshold; set one explicitly")]
    EmptyThresholdSample,

    #[error("recall undefined: ground truth has no pairs")]
    EmptyGroundTruth,

    #[error("degenerate denominator: label {0} has fewer than 2 nodes")]
    DegenerateLabel(String),

    #[error("cannot sample duplicates: label {0} has no nodes")]
    EmptyNoiseTarget(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: impl Into<String>, source: Error) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(source),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::MissingColumn { .. }
            | Error::InvalidPattern(_)
            | Error::EmptyThresholdSample
            | Error::DimensionMismatch { .. } => ErrorKind::Config,
            Error::DuplicateNode(_)
            | Error::DanglingEdge { .. }
            | Error::MalformedRecord { .. }
            | Error::NodeNotFound(_)
            | Error::UnresolvedForeignKey { .. }
            | Error::UnknownAttribute(_)
            | Error::EmptyGroundTruth
            | Error::DegenerateLabel(_)
            | Error::EmptyNoiseTarget(_)
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Csv(_) => ErrorKind::Data,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Stage,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
