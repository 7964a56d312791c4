use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time grid under-resolves the phase e^(i s |k|/eps): dt = {dt:e} exceeds eps/(4|k|) = {limit:e}")]
    UnderResolved { dt: f64, limit: f64 },
    #[error("relative energy drift {drift:e} exceeds tolerance {tol:e}; reduce dt")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
