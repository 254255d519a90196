use thiserror::Error;

/// Errors produced by dataset handling, fitting and model I/O.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("observation {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("observation {index} has a non-finite {field}")]
    NonFiniteValue { index: usize, field: &'static str },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("basis function vanishes at every sample point")]
    DegenerateBasis,
    #[error("no frequency in the band reduces the sum of squares")]
    NoViableCandidate,
    #[error("every transformed input is zero; sinusoidal terms cannot fit")]
    AllInputsZero,
    #[error("too few points to split {n} observations with validation fraction {fraction}")]
    TooFewPoints { n: usize, fraction: f64 },
    #[error("iteration record {index} carries no validation sum of squares")]
    MissingValidationSs { index: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
