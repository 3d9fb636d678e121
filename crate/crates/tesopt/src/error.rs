//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh construction: {0}")]
    Mesh(String),

    #[error("conductivity: {0}")]
    Conductivity(String),

    #[error("electrode placement: {0}")]
    Electrodes(String),

    #[error("target specification: {0}")]
    Target(String),

    #[error("assembly: {0}")]
    Assembly(String),

    #[error(
        "solver did not converge: relative residual {residual:.3e} after {iterations} iterations"
    )]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("transfer matrix column {column} (electrode pattern e_{column}): {source}")]
    TransferColumn { column: usize, source: Box<Error> },

    #[error("optimization: {0}")]
    Optimization(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
