use thiserror::Error;

/// Errors raised by the polarimetry routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolError {
    #[error("intensity must be positive (got {0})")]
    ZeroIntensity(f64),
    #[error("matrix is not a valid normalized coherency matrix: {0}")]
    NotAState(String),
    #[error("state is not pure: degree of polarization {0}")]
    NotPure(f64),
    #[error("detector {0} has a zero-amplitude detection state")]
    DegenerateFrame(usize),
    #[error("matrix is singular (condition number {0:e})")]
    Singular(f64),
    #[error("calibration states do not span the Stokes space: {0}")]
    Coplanar(String),
    #[error("state is unphysical: degree of polarization {0}")]
    Unphysical(f64),
    #[error("all detector counts are zero")]
    EmptyCounts,
    #[error("reconstructed intensity is not positive ({0})")]
    NegativeIntensity(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = PolError> = std::result::Result<T, E>;
