//! Multi-processor approximate message passing (MP-AMP) for linear inverse
//! problems `y = Ax + w`.
//!
//! The crate provides:
//!
//! - problem generation (Bernoulli-Gaussian signals, i.i.d. Gaussian matrices,
//!   AWGN measurements, row/column partitions) in [`model`];
//! - the Bayesian scalar denoiser and its MSE map in [`denoise`];
//! - centralized AMP and its state-evolution (SE) predictor in [`amp`];
//! - row-partitioned MP-AMP, lossless and lossy, with the lossy SE predictor
//!   in [`row_mp`];
//! - column-partitioned MP-AMP with outer/inner schedules and its SE in
//!   [`col_mp`];
//! - uniform entropy-coded scalar quantization and rate-distortion models in
//!   [`quantize`];
//! - dynamic-programming optimization of per-iteration coding rates in
//!   [`rate_dp`];
//! - a deterministic in-process fusion-center/worker harness that carries the
//!   algorithms' messages and accounts every transmitted bit in [`netsim`].
//!
//! All stochastic operations take explicit seeds or generator substreams, so
//! every experiment is bit-reproducible.

pub mod amp;
pub mod col_mp;
pub mod denoise;
pub mod error;
pub mod linalg;
pub mod model;
pub mod netsim;
pub mod quadrature;
pub mod quantize;
pub mod rate_dp;
pub mod rng;
pub mod row_mp;

pub use error::Error;
pub use model::{ColPartition, LinearProblem, RowPartition, SignalPrior};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
