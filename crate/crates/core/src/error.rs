//! Error type shared by all solver and planner modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Iterates left the trust region (non-finite values or MSE blow-up).
    #[error("divergence at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    #[error("no convergence after {cap} iterations")]
    NoConvergence { cap: usize },

    #[error("target distortion {target} outside (0, {max}]")]
    DistortionOutOfRange { target: f64, max: f64 },

    /// The EMSE target cannot be met even at infinite coding rate.
    #[error("EMSE target {target_db} dB unreachable: {reason}")]
    UnreachableTarget { target_db: f64, reason: String },

    /// Rate planning succeeded on the discretized grid but the exact
    /// state-evolution check of the extracted plan missed the target.
    #[error("DP state grid too coarse: {0}")]
    GridTooCoarse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
