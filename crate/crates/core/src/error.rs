use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state not normalized: ‖c‖² = {norm} (tolerance {tol:e})")]
    Normalization { norm: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("numerically invalid input: {0}")]
    NumericalValidity(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("norm drift {drift:e} exceeds {bound:e} at t = {t}")]
    Stability { t: f64, drift: f64, bound: f64 },
}
