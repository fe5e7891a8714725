use thiserror::Error;

/// Errors produced by model construction, certification and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix in mode `{mode}`: {what}")]
    Singular { mode: String, what: String },

    #[error("non-finite value at t = {time} s{}: {what}", mode.map(|p| format!(" (mode {p})")).unwrap_or_default())]
    NonFinite { time: f64, mode: Option<usize>, what: String },

    #[error("parameter estimate left the projection set at t = {time} s: {what}")]
    ProjectionEscape { time: f64, what: String },

    #[error("reference system diverged at t = {time} s (norm {norm:.3e}); certificate likely violated")]
    Divergence { time: f64, norm: f64 },

    #[error("no certificate found: {0}")]
    NotFound(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
