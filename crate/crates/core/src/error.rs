use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimated error {error:.3e})")]
    OracleFailure { a: f64, b: f64, error: f64 },

    #[error("time step underflow at t = {t}: dt = {dt:.3e}")]
    StiffnessFailure { t: f64, dt: f64 },

    #[error("non-finite field at t = {t}; last good checkpoint: {last_good:?}")]
    DivergenceFailure { t: f64, last_good: Option<PathBuf> },

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {value}")))
    }
}
