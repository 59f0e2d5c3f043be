use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed recode spec: {0}")]
    RecodeSpec(String),
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has level `{level}` with no recode rule")]
    UnknownLevel { variable: String, level: String },
    #[error("recode rule for `{variable}` does not map level `{level}`")]
    IncompleteMapping { variable: String, level: String },
    #[error("table has no rows")]
    EmptyTable,
    #[error("group label `{0}` does not occur in the data")]
    LabelAbsent(String),
    #[error("target and background are both `{0}`")]
    DegenerateSplit(String),
    #[error("group `{0}` is empty")]
    EmptyGroup(String),
    #[error("cell ({variable}, {level}) is not in the vocabulary")]
    OutsideVocabulary { variable: String, level: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("eigensolver did not produce finite eigenpairs")]
    EigenFailure,
    #[error("eigenvalue {index} is {value:e}; contrastive space has no CA geometry at this alpha")]
    NonpositiveEigenvalue { index: usize, value: f64 },
    #[error("alpha iteration did not converge within {iterations} iterations")]
    NonconvergenceWithinBudget {
        iterations: usize,
        trace: Box<crate::alpha::AlphaTrace>,
    },
    #[error("zero denominator in alpha update at step {0}")]
    ZeroDenominator(usize),
}

/// Coarse classification used for exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numerical,
}

impl Error {
    /// Stable, machine-readable variant name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "Io",
            Error::Csv(_) => "Csv",
            Error::RecodeSpec(_) => "RecodeSpec",
            Error::HeaderMismatch(_) => "HeaderMismatch",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::UnknownLevel { .. } => "UnknownLevel",
            Error::IncompleteMapping { .. } => "IncompleteMapping",
            Error::EmptyTable => "EmptyTable",
            Error::LabelAbsent(_) => "LabelAbsent",
            Error::DegenerateSplit(_) => "DegenerateSplit",
            Error::EmptyGroup(_) => "EmptyGroup",
            Error::OutsideVocabulary { .. } => "OutsideVocabulary",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NonFinite(_) => "NonFinite",
            Error::EigenFailure => "EigenFailure",
            Error::NonpositiveEigenvalue { .. } => "NonpositiveEigenvalue",
            Error::NonconvergenceWithinBudget { .. } => "NonconvergenceWithinBudget",
            Error::ZeroDenominator(_) => "ZeroDenominator",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonFinite(_)
            | Error::EigenFailure
            | Error::NonpositiveEigenvalue { .. }
            | Error::NonconvergenceWithinBudget { .. }
            | Error::ZeroDenominator(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
