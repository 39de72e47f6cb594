use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),

    #[error("no data: node has no observed feedback")]
    NoData,

    #[error("round index must be at least 1")]
    ZeroRound,

    #[error("point {point:?} lies outside the domain of `{benchmark}`")]
    OutOfDomain { benchmark: String, point: Vec<f64> },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("rho must lie strictly inside (0, 1), got {0}")]
    RhoOutOfRange(f64),

    #[error("policy ucb1-sigma requires a finite noise std (sigma)")]
    MissingSigma,

    #[error("policy ucbv requires a finite positive range proxy (b)")]
    MissingRange,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),

    #[error("wait-and-act requires a constant delay, got {0}")]
    NonConstantDelay(String),

    #[error("seed list is empty")]
    EmptySeeds,

    #[error("checkpoints must be strictly increasing")]
    UnsortedCheckpoints,

    #[error("config error: {0}")]
    Config(String),

    #[error("run with seed {seed} failed: {source}")]
    Seeded {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

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
    /// Coarse category used by the CLI for diagnostics and exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Csv { .. } => "io",
            Error::Seeded { source, .. } => source.category(),
            Error::NotALeaf(_) | Error::NoData | Error::ZeroRound => "runtime",
            _ => "config",
        }
    }
}
