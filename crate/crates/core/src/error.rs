use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("operation undefined for a constant map")]
    ConstantMap,
    #[error("pole of order {order} at {at}: not a Delaunay-type singularity")]
    PoleOrder { order: i64, at: String },
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("ill-conditioned Toeplitz system (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("reducible representation at lambda = {lambda}")]
    Reducible { lambda: String },
    #[error("not unitarizable at lambda sample(s) {samples:?}")]
    NotUnitarizable { samples: Vec<usize> },
    #[error("step size underflow near {at}")]
    StepUnderflow { at: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
