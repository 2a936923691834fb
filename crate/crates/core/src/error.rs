use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no observations")]
    NoObservations,
    #[error("duplicate observation ({entity},{time},{indicator})")]
    DuplicateObservation {
        entity: String,
        time: String,
        indicator: String,
    },
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid time point {0:?}")]
    InvalidTime(String),
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown time {0:?}")]
    UnknownTime(String),
    #[error("unknown indicator {0:?}")]
    UnknownIndicator(String),
    #[error("invalid data cube: {0}")]
    InvalidCube(String),
    #[error("invalid event for {entity}: end {end} precedes start {start}")]
    EventOrder {
        entity: String,
        start: String,
        end: String,
    },
    #[error("vector has no observed components")]
    AllMissing,
    #[error("need at least {needed} complete rows, found {found}")]
    TooFewCompleteRows { needed: usize, found: usize },
    #[error("zero variance in indicator {0:?}")]
    DegenerateCovariance(String),
    #[error("empty time slice {0}")]
    EmptySlice(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("labels must contain at least one positive and one negative row")]
    OneClassLabels,
    #[error("invalid state token: {0}")]
    InvalidToken(String),
    #[error("state document is {0} bytes, limit is 2048")]
    StateTooLarge(usize),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes / status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numeric,
    NotFound,
    Io,
}

impl Error {
    pub fn row(row: u64, message: impl Into<String>) -> Self {
        Error::Row {
            row,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownEntity(_)
            | Error::UnknownTime(_)
            | Error::UnknownIndicator(_) => ErrorKind::NotFound,
            Error::TooFewCompleteRows { .. }
            | Error::DegenerateCovariance(_)
            | Error::NonFinite(_) => ErrorKind::Numeric,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }
}
