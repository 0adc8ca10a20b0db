//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// `vex` was handed a matrix whose antisymmetry defect exceeds the tolerance.
    #[error("matrix is not antisymmetric: defect {defect:.3e} exceeds {tol:.1e}")]
    NotAntisymmetric { defect: f64, tol: f64 },

    /// The rotation logarithm is ill-conditioned within the requested margin of a half turn.
    #[error("rotation is within {margin:.3e} of a half turn; log map is ill-conditioned")]
    NearHalfTurn { margin: f64 },

    /// A matrix could not be projected onto the rotation group.
    #[error("cannot project onto rotations: {reason}")]
    NotProjectable { reason: String },

    /// A checked rotation constructor rejected its input.
    #[error("matrix is not a rotation: orthonormality defect {defect:.3e}, det {det:.6}")]
    NotARotation { defect: f64, det: f64 },

    /// The camera cannot resolve a bearing below the minimum range.
    #[error("bearing undefined: relative range {range:.3e} m is below {min:.1e} m")]
    BearingUndefined { range: f64, min: f64 },

    /// The Riccati matrix lost positive definiteness; the run must abort.
    #[error("Riccati covariance lost positive definiteness at t = {t:.4} s (lambda_min = {lambda_min:.3e})")]
    RiccatiNotPositiveDefinite { t: f64, lambda_min: f64 },

    /// A run or audit configuration is invalid or could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// A trace file has the wrong shape or unparsable fields.
    #[error("trace error: {0}")]
    Trace(String),

    /// File IO failure, annotated with the path involved.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wraps an IO error with the offending path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
