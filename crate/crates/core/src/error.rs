use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error("auxiliary variable collapsed: |R| = {value:e} is not above the floor {floor:e}")]
    AuxiliaryCollapse { value: f64, floor: f64 },

    #[error("history: {0}")]
    History(String),

    #[error("sum-of-exponentials fit failed: achieved relative error {achieved:e} > {tol:e} with {modes} modes")]
    SoeFit { achieved: f64, tol: f64, modes: usize },

    #[error("scheme equations not satisfied at step {step}: residual {residual:e}")]
    Residual { step: usize, residual: f64 },

    #[error("energy increased at step {step}: {before} -> {after}")]
    EnergyIncrease { step: usize, before: f64, after: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
