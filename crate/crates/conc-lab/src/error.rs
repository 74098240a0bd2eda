use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of range: {0}")]
    Range(String),

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty fit window: {0}")]
    Window(String),

    #[error("spectral condition violated: {0}")]
    Admissibility(String),

    #[error("singular matrix: smallest pivot {0:.3e}")]
    Singular(f64),

    #[error("degenerate leave-one-out pivot: |1 + D_i * Delta_i| = {0:.3e}")]
    DegeneratePivot(f64),

    #[error("did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("ensembles are not aligned: {0}")]
    Alignment(String),

    #[error("rejection rate {rate:.4} exceeds threshold {threshold:.4} ({rejected}/{total} draws)")]
    RejectionRate {
        rate: f64,
        threshold: f64,
        rejected: usize,
        total: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
