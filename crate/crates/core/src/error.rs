use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs that cannot be combined or violate a documented precondition.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// The full-duplex loop-interference series does not converge.
    #[error("full-duplex loop diverges: loop gain rho = {rho:.6} >= 1")]
    DivergentLoop { rho: f64 },

    #[error("dead subcarrier {bin}: |H| = {magnitude:e} below equalization floor")]
    DeadSubcarrier { bin: usize, magnitude: f64 },

    /// The scheme has a closed-form BER but no waveform realization.
    #[error("{0} is analytic-only and cannot be simulated")]
    AnalyticOnly(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
