use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("points {i} and {j} coincide (distance 0); remove duplicates before building neighbors")]
    DegeneratePair { i: usize, j: usize },

    #[error("cannot sample {requested} remote points for point {point}: only {available} candidates")]
    InfeasibleSampling {
        point: usize,
        requested: usize,
        available: usize,
    },

    #[error("neighbor graph is disconnected: no path between {i} and {j} (try a larger k)")]
    DisconnectedGraph { i: usize, j: usize },

    #[error("remote distances have not been assigned but the remote weight is positive")]
    RemoteDistancesUnassigned,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver diverged at iteration {iteration}, row {row}")]
    Divergence { iteration: usize, row: usize },

    #[error("labels are required for this metric")]
    MissingLabels,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{stage} stage failed: {inner}")]
    Stage { stage: &'static str, inner: Box<Error> },
}
