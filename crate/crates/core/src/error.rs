use std::io;

use thiserror::Error;

/// Errors produced anywhere in the optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an argument outside the accepted domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two fields that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The FDTD run did not decay before the step cap.
    #[error("fields still at {ratio:.3e} of peak energy after {steps} steps; absorbing layer insufficient or structure resonant")]
    NonDecaying { steps: usize, ratio: f64 },

    /// The source spectrum is too weak at the requested frequency to deconvolve.
    #[error("source spectrum |j(w)| = {magnitude:.3e} is below 1e-12 of its peak {peak:.3e}")]
    WeakSpectrum { magnitude: f64, peak: f64 },

    /// The masked velocity field vanished identically.
    #[error("velocity field is identically zero after masking")]
    ZeroVelocity,

    /// A NaN or infinity showed up where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Malformed binary snapshot or text file.
    #[error("format error: {0}")]
    Format(String),

    /// Configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
