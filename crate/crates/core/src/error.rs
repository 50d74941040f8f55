use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid probability {name} = {value}: must lie in [0, 1)")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("batch size must be at least 1")]
    EmptyBatch,

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("ACK population {population} exceeds the supported maximum of {max}")]
    PopulationTooLarge { population: usize, max: usize },

    #[error("receiver id {id} is outside population {population}")]
    ReceiverOutOfRange { id: usize, population: usize },

    #[error("pattern length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("cannot superimpose an empty set of patterns")]
    EmptySuperimposition,

    #[error("word {word} is not a superimposition of population-{population} patterns")]
    Undecodable { word: String, population: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("simulation exceeded the slot cap of {cap} slots ({context})")]
    SlotCapExceeded { cap: u64, context: String },

    #[error("at {point}: {source}")]
    AtPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Wraps the error with the parameter point that produced it.
    pub fn at(self, point: impl Into<String>) -> Self {
        Error::AtPoint {
            point: point.into(),
            source: Box::new(self),
        }
    }
}
