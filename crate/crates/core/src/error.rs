use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate fell outside the closed interval it must live in.
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The transverse grid is too coarse for the velocity profile.
    #[error(
        "corrector of order {order} is under-resolved: measured residual {residual:.3e} exceeds {tolerance:.3e}"
    )]
    Resolution {
        order: usize,
        residual: f64,
        tolerance: f64,
    },

    /// Gram-Schmidt met a raw function already contained in the span of its predecessors.
    #[error("degenerate mode {index}: residual norm {residual:.3e} below threshold {threshold:.3e}")]
    Degenerate {
        index: usize,
        residual: f64,
        threshold: f64,
    },

    #[error("mesh Peclet number {peclet:.4} reaches the limit {limit} (Galerkin without stabilisation)")]
    MeshPeclet { peclet: f64, limit: f64 },

    #[error("singular factorisation in {what} at row {row}")]
    Singular { what: &'static str, row: usize },

    #[error("non-finite state after time step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
