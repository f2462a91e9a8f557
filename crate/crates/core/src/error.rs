use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mixing angle or dressed basis undefined (Δ = λ = 0, or a complex degeneracy).
    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("step size too coarse: spectral bound × dt = {product:.4} > {limit}; need at least {min_steps} steps")]
    Stability {
        product: f64,
        limit: f64,
        min_steps: usize,
    },

    #[error("adiabaticity failure: |<psi(0)|psi(T)>| = {overlap:.6} < {threshold}")]
    Adiabaticity { overlap: f64, threshold: f64 },

    #[error("eigenpath tracking failed at step {step}: successive overlap {overlap:.4}")]
    Tracking { step: usize, overlap: f64 },

    #[error("mesh cap {cap} exceeded; last max per-step phase increment {max_increment:.4} rad")]
    MeshCap { cap: usize, max_increment: f64 },

    #[error("phase unwrapping failed: increment {increment:.4} rad at checkpoint stride 1")]
    PhaseTracking { increment: f64 },

    #[error("truncation: population {population:.3e} reached the photon cutoff")]
    Truncation { population: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Degenerate(_)
            | Error::Stability { .. }
            | Error::Io { .. } => 2,
            Error::Adiabaticity { .. }
            | Error::Tracking { .. }
            | Error::MeshCap { .. }
            | Error::PhaseTracking { .. }
            | Error::Truncation { .. }
            | Error::Eigen(_) => 3,
        }
    }
}
