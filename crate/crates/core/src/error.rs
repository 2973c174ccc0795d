use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: ||S^dag S - I||_F = {residual:.3e} (tolerance {tolerance:.1e})")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("matrix is not Hermitian: ||V - V^dag||_F = {residual:.3e} (tolerance {tolerance:.1e})")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("matrix must be square with at least one mode, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error(
        "eigenphase {phase:.9} lies within {guard:.1e} rad of pi; the device has no point-coupling representation"
    )]
    NonRepresentableDevice { phase: f64, guard: f64 },

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("shifted support leaves the grid ({context})")]
    GridOverflow { context: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("frequency label {0} is not part of the state")]
    UnknownFrequencyLabel(f64),

    #[error("index {index} out of range 0..{len} ({context})")]
    IndexOutOfRange {
        index: usize,
        len: usize,
        context: &'static str,
    },

    #[error("bond dimension {dim} exceeds the cap {cap} at bond {bond}")]
    BondExplosion { dim: usize, cap: usize, bond: usize },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("internal numerical error: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed, inconsistent or out-of-range
    /// input, as opposed to failures during a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotUnitary { .. }
                | Error::NotHermitian { .. }
                | Error::NotSquare { .. }
                | Error::NonRepresentableDevice { .. }
                | Error::DimensionMismatch { .. }
                | Error::UnknownFrequencyLabel(_)
                | Error::IndexOutOfRange { .. }
                | Error::InvalidConfig { .. }
                | Error::InvalidGrid(_)
                | Error::Json { .. }
                | Error::Io { .. }
        )
    }
}
