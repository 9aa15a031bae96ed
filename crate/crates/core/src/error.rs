use thiserror::Error;

use crate::margins::TraceEntry;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time of day {0:?}: expected HH:MM:SS within 00:00:00..23:59:59")]
    InvalidTime(String),

    #[error("time window must satisfy start < end (got {start}..{end})")]
    EmptyWindow { start: String, end: String },

    #[error("window of {window_secs} s is not divisible into {bins} equal whole-second bins")]
    InexactBins { window_secs: u32, bins: usize },

    #[error("bin count must be at least 1")]
    ZeroBins,

    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: u64,
        field: String,
        message: String,
    },

    #[error("duplicate record for vehicle {vehicle_id:?} in session {session_id:?}")]
    DuplicateRecord {
        vehicle_id: String,
        session_id: String,
    },

    #[error("session id {0:?} appears in more than one superimposed part")]
    SessionCollision(String),

    #[error("record (vehicle {vehicle_id:?}, session {session_id:?}) at {departure} lies outside the bin grid window")]
    OutsideWindow {
        vehicle_id: String,
        session_id: String,
        departure: String,
    },

    #[error("no sampling sessions")]
    NoSessions,

    #[error("empty window: every bin mean is zero")]
    EmptyBins,

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("no bin count in the searched range satisfies the granularity constraint")]
    NoFeasibleGranularity { trace: Vec<TraceEntry> },

    #[error("need at least {components} departure times to fit {components} components, got {points}")]
    TooFewPoints { points: usize, components: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("mixture mass outside window")]
    MassOutsideWindow,

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("constant input")]
    ConstantInput,

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
