use std::path::PathBuf;

/// Errors produced anywhere in the embedding and clustering pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("input file is empty")]
    EmptyFile,
    #[error("schema column `{0}` not present in the data header")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("cannot parse `{token}` as a number (row {row}, column `{column}`)")]
    ParseFailure {
        row: usize,
        column: String,
        token: String,
    },
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("continuous column `{0}` has zero spread")]
    ConstantColumn(String),
    #[error("attribute `{0}` is not continuous")]
    NotContinuous(String),
    #[error("attribute `{0}` not found")]
    NoSuchAttribute(String),
    #[error("quantile {0} outside the open interval (0, 1)")]
    QuantileOutOfRange(f64),
    #[error("dataset has no categorical attributes")]
    NoCategoricalAttributes,
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("every categorical attribute has a single level; no nontrivial dimension exists")]
    DegenerateData,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("column {column} is linearly dependent on earlier columns after centering")]
    RankDeficient { column: usize },
    #[error("n = {n} exceeds the dense eigendecomposition guard of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("schema fingerprint mismatch: solution {expected}, data {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error("level `{level}` of attribute `{attribute}` has no quantification")]
    UnseenLevel { attribute: String, level: String },
    #[error("k = {k} is too large for {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("CF-tree has {entries} leaf entries, fewer than k = {k}; lower the threshold")]
    TooFewLeafEntries { entries: usize, k: usize },
    #[error("sample size {sample_size} must satisfy k = {k} < sample size <= n = {n}")]
    SampleTooSmall { k: usize, sample_size: usize, n: usize },
    #[error("label vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} rows, got {actual}")]
    TooFewRows { needed: usize, actual: usize },
    #[error("at least two clusters are required")]
    KLessThanTwo,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("invalid level probabilities: {0}")]
    InvalidProbabilities(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::EmptyFile => "EmptyFile",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::InvalidSchema(_) => "InvalidSchema",
            Error::ParseFailure { .. } => "ParseFailure",
            Error::MissingValue { .. } => "MissingValue",
            Error::ConstantColumn(_) => "ConstantColumn",
            Error::NotContinuous(_) => "NotContinuous",
            Error::NoSuchAttribute(_) => "NoSuchAttribute",
            Error::QuantileOutOfRange(_) => "QuantileOutOfRange",
            Error::NoCategoricalAttributes => "NoCategoricalAttributes",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::DegenerateData => "DegenerateData",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::TooLarge { .. } => "TooLarge",
            Error::SchemaMismatch { .. } => "SchemaMismatch",
            Error::UnseenLevel { .. } => "UnseenLevel",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::EmptyDataset => "EmptyDataset",
            Error::TooFewLeafEntries { .. } => "TooFewLeafEntries",
            Error::SampleTooSmall { .. } => "SampleTooSmall",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TooFewRows { .. } => "TooFewRows",
            Error::KLessThanTwo => "KLessThanTwo",
            Error::EmptyCluster(_) => "EmptyCluster",
            Error::InvalidProbabilities(_) => "InvalidProbabilities",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
