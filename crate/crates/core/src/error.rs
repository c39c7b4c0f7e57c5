use thiserror::Error;

use crate::basis::Space;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum ArhdError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("basis index {index} out of range for {n_funcs} functions")]
    IndexOutOfRange { index: usize, n_funcs: usize },

    #[error("time {t} outside block [0, {delta}]")]
    TimeOutOfRange { t: f64, delta: f64 },

    #[error("underdetermined projection: {m} samples for {n_funcs} basis functions")]
    Underdetermined { m: usize, n_funcs: usize },

    #[error("expected {expected:?}-space coordinates, got {got:?}")]
    SpaceMismatch { expected: Space, got: Space },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("trajectory of length {len} cannot be cut into blocks of {m} points")]
    BadTrajectory { len: usize, m: usize },

    #[error("panel is already centered")]
    AlreadyCentered,

    #[error("panel must be centered before fitting")]
    NotCentered,

    #[error("operator is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("covariance has eigenvalue {0:e} below the roundoff tolerance")]
    Indefinite(f64),

    #[error("Schur operator has eigenvalue {0:e}, expected a positive operator")]
    DegenerateSchur(f64),

    #[error("zero eigenvalue inside the retained {0}-dimensional subspace")]
    SingularSubspace(usize),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ArhdError>;
