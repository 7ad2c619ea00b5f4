use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive or non-finite price {price} at position {index}")]
    NonPositivePrice { index: usize, price: f64 },

    #[error("series too short: {len} points, need at least {min}")]
    TooShortSeries { len: usize, min: usize },

    #[error("dates not strictly increasing at position {index} ({date})")]
    UnorderedDates { index: usize, date: NaiveDate },

    #[error("non-finite return at position {index}")]
    NonFiniteReturn { index: usize },

    #[error("no prices for ticker {0}")]
    UnknownTicker(String),

    #[error("stock and market calendars do not overlap")]
    EmptyIntersection,

    #[error("outcome date {0} is after the last trading day in the data")]
    OutcomeDateBeyondData(NaiveDate),

    #[error("announcement window [{start}, {end}] falls outside the panel of {len} days")]
    WindowOutOfRange { start: i64, end: i64, len: usize },

    #[error("insufficient history: need {needed} trading days before the window, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("GARCH parameters are not covariance stationary (psi1 + psi2 = {persistence})")]
    NonStationaryParams { persistence: f64 },

    #[error("invalid GARCH parameters: {0}")]
    InvalidParams(String),

    #[error("conditional variance underflowed to {value} at observation {index}")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("optimizer did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("too few cases: {k} usable, need at least {min}")]
    TooFewCases {
        k: usize,
        min: usize,
        failures: Vec<CaseFailure>,
    },

    #[error("empty announcement window")]
    EmptyWindow,

    #[error("no eligible pseudo-event dates for bootstrap resampling")]
    NoEligibleDates,

    #[error("window too short: {len} observations, need at least {min}")]
    TooShortWindow { len: usize, min: usize },

    #[error("pre-event return variance is zero")]
    ZeroPreEventVariance,

    #[error("case {case_id}: missing feature `{column}`")]
    MissingFeature { case_id: String, column: String },

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("insufficient observations: n = {n}, k = {k} (need n > k)")]
    InsufficientObservations { n: usize, k: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A case that was dropped from a cross-section, with the reason.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub reason: String,
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonStationaryParams { .. }
            | Error::InvalidParams(_)
            | Error::NonPositiveVariance { .. }
            | Error::NonConvergence { .. }
            | Error::DegenerateData(_)
            | Error::TooFewCases { .. }
            | Error::SingularDesign
            | Error::InsufficientObservations { .. }
            | Error::ZeroPreEventVariance => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
