use std::path::PathBuf;

/// Errors raised anywhere in the simulator and learning core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("evaluation tape is stale: produced for generation {tape}, params are at {params}")]
    StaleTape { tape: u64, params: u64 },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no policy cached for peer {0}")]
    PeerNotInitialized(usize),

    #[error("data corruption: {0}")]
    DataCorruption(String),

    #[error("insufficient data: need at least {needed} samples, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("staleness diagnostic unavailable: fresh policies are not observable")]
    DiagnosticUnavailable,

    #[error(
        "stability violation at step {step}: {what} norm {norm:.4e} exceeds ceiling {ceiling:.4e}"
    )]
    StabilityViolation {
        step: u64,
        what: String,
        norm: f64,
        ceiling: f64,
    },

    #[error("schema error in {path}: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("runs are not comparable:\n{0}")]
    Incomparable(String),

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
