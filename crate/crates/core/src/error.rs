use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: entry ({row},{col}) differs from conj of ({col},{row}) by {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("basis vectors {first} and {second} are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal {
        first: usize,
        second: usize,
        deviation: f64,
    },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operation `{operation}` is not available in {mode} mode")]
    Mode {
        operation: &'static str,
        mode: &'static str,
    },

    #[error("projection of the cross-correlation vector vanished (norm {norm:e})")]
    DegenerateProjection { norm: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
