use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("non-positive entry in {field} at index {index}: {value}")]
    NonPositiveEntry {
        field: &'static str,
        index: usize,
        value: f64,
    },

    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cut pair ({first}, {second}) out of range for a {layers}-layer model")]
    CutOutOfRange {
        first: usize,
        second: usize,
        layers: usize,
    },

    #[error("client {client} has server-side work but a zero server share")]
    ZeroShareWithNonzeroBody { client: usize },

    #[error("scenario has no clients")]
    EmptyScenario,

    #[error("allocation has {got} shares for {expected} clients")]
    AllocationLength { expected: usize, got: usize },

    #[error("grid oracle supports at most {max} clients, got {got}")]
    TooManyClientsForOracle { max: usize, got: usize },

    #[error("grid oracle resolution must be at least {min}, got {got}")]
    OracleResolution { min: usize, got: usize },

    #[error("only one feasible cut pair exists; no second candidate")]
    NoSecondCandidate,

    #[error("bisection failed to converge after {iterations} iterations")]
    BisectionStalled { iterations: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Internal failures are bugs or numerical breakdowns rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::BisectionStalled { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
