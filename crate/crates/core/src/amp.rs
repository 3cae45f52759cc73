//! Centralized AMP and its state-evolution (SE) predictor.
//!
//! Iterations follow
//! `z_t = y - A x_{t-1} + (1/kappa) z_{t-1} <eta'_{t-2}(f_{t-1})>` and
//! `x_t = eta(x_{t-1} + A^T z_t)`, starting from `x_0 = 0`, `z_0 = 0` (so the
//! first residual is `y` and the Onsager term is absent). The denoiser is
//! calibrated per iteration with the empirical estimate `||z_t||^2 / M` of
//! the equivalent-channel noise variance.

use crate::denoise::{eta, eta_prime, scalar_mse, ScalarChannel};
use crate::error::Error;
use crate::linalg::{mse, norm_sq};
use crate::model::{LinearProblem, SignalPrior};
use crate::Result;

/// Iterates of an AMP run.
#[derive(Debug, Clone)]
pub struct AmpState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Completed iteration count.
    pub t: usize,
    /// Final empirical channel-variance estimate `||z_t||^2 / M`.
    pub sigma2_hat: f64,
}

/// One step of the SE recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeEntry {
    /// Channel term excluding measurement noise, `sigma_t^2`.
    pub sigma2: f64,
    /// Full equivalent-channel variance `tau_t^2 = sigma_w^2 + sigma_t^2`.
    pub tau2: f64,
    /// Predicted signal MSE of the next estimate, `kappa * sigma_{t+1}^2`.
    pub predicted_mse: f64,
}

/// Deterministic SE trace; entry `t` predicts the estimate produced by AMP
/// iteration `t + 1`.
#[derive(Debug, Clone)]
pub struct SeTrace {
    pub entries: Vec<SeEntry>,
}

impl SeTrace {
    /// Predicted MSE of the estimate after `iter` iterations (1-based).
    pub fn predicted_mse_at(&self, iter: usize) -> f64 {
        self.entries[iter - 1].predicted_mse
    }

    pub fn final_sigma2(&self) -> f64 {
        self.entries.last().expect("nonempty trace").sigma2
    }
}

/// Fixed point of the SE recursion.
#[derive(Debug, Clone, Copy)]
pub struct FixedPoint {
    /// Converged channel term `sigma_inf^2` (measurement noise excluded).
    pub sigma_inf2: f64,
    /// `MSE(eta, sigma_w^2 + sigma_inf2)`, the large-system MMSE.
    pub mmse: f64,
}

impl FixedPoint {
    /// Full channel variance at the fixed point.
    pub fn tau_inf2(&self, noise_var: f64) -> f64 {
        noise_var + self.sigma_inf2
    }
}

pub(crate) const DIVERGENCE_FACTOR: f64 = 1e3;
const FIXED_POINT_CAP: usize = 10_000;
/// State below this is numerically indistinguishable from exact recovery.
const SIGMA2_FLOOR: f64 = 1e-250;

/// Run centralized AMP for `iters` iterations; returns the final state and
/// the per-iteration empirical MSE `||x_t - x||^2 / N`, `t = 1..=iters`.
pub fn amp_run(
    problem: &LinearProblem,
    prior: &SignalPrior,
    iters: usize,
) -> Result<(AmpState, Vec<f64>)> {
    if iters == 0 {
        return Err(Error::param("iters", "need at least one iteration"));
    }
    let m = problem.m();
    let n = problem.n();
    if problem.y.len() != m || problem.x_true.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "problem vectors disagree with matrix {m}x{n}"
        )));
    }
    let kappa = problem.kappa();
    let blow_up = DIVERGENCE_FACTOR * prior.second_moment().max(f64::MIN_POSITIVE);

    let mut x = vec![0.0; n];
    let mut z = vec![0.0; m];
    let mut g = 0.0; // <eta'> from the previous iteration; no Onsager term yet
    let mut sigma2_hat = 0.0;
    let mut mse_per_iter = Vec::with_capacity(iters);

    for t in 1..=iters {
        let ax = problem.a.matvec(&x);
        for i in 0..m {
            z[i] = problem.y[i] - ax[i] + (1.0 / kappa) * z[i] * g;
        }
        sigma2_hat = norm_sq(&z) / m as f64;
        if !sigma2_hat.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                detail: format!("residual energy {sigma2_hat}"),
            });
        }
        let channel = ScalarChannel::new(sigma2_hat)?;

        let mut f = problem.a.t_matvec(&z);
        for (fj, xj) in f.iter_mut().zip(&x) {
            *fj += xj;
        }

        let mut dsum = 0.0;
        for j in 0..n {
            let u = f[j];
            x[j] = eta(u, &channel, prior);
            dsum += eta_prime(u, &channel, prior);
        }
        g = dsum / n as f64;

        let err = mse(&x, &problem.x_true);
        if !err.is_finite() || err > blow_up {
            return Err(Error::Diverged {
                iteration: t,
                detail: format!("empirical MSE {err:e}"),
            });
        }
        mse_per_iter.push(err);
    }

    Ok((
        AmpState {
            x,
            z,
            t: iters,
            sigma2_hat,
        },
        mse_per_iter,
    ))
}

/// SE recursion: `sigma_0^2 = E[X^2]/kappa`, `tau_t^2 = sigma_w^2 + sigma_t^2`,
/// `sigma_{t+1}^2 = MSE(eta, tau_t^2) / kappa`. The trace has `iters + 1`
/// entries (t = 0..=iters).
pub fn se_run(kappa: f64, noise_var: f64, prior: &SignalPrior, iters: usize) -> SeTrace {
    assert!(kappa > 0.0, "kappa must be positive");
    assert!(noise_var >= 0.0, "noise_var must be nonnegative");
    let mut entries = Vec::with_capacity(iters + 1);
    let mut sigma2 = prior.second_moment() / kappa;
    for _ in 0..=iters {
        let tau2 = noise_var + sigma2;
        let step_mse = scalar_mse(&ScalarChannel::new(tau2).expect("tau2 >= 0"), prior);
        entries.push(SeEntry {
            sigma2,
            tau2,
            predicted_mse: step_mse,
        });
        sigma2 = step_mse / kappa;
    }
    SeTrace { entries }
}

/// Iterate SE from `sigma_0^2 = E[X^2]/kappa` to its (worst) fixed point.
/// Convergence: `|sigma_{t+1}^2 - sigma_t^2| <= tol * sigma_t^2`.
pub fn se_fixed_point(
    kappa: f64,
    noise_var: f64,
    prior: &SignalPrior,
    tol: f64,
) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be > 0, got {tol}")));
    }
    let mut sigma2 = prior.second_moment() / kappa;
    for _ in 0..FIXED_POINT_CAP {
        let tau2 = noise_var + sigma2;
        let next = scalar_mse(&ScalarChannel::new(tau2)?, prior) / kappa;
        if (next - sigma2).abs() <= tol * sigma2 || next <= SIGMA2_FLOOR {
            let sigma_inf2 = if next <= SIGMA2_FLOOR { 0.0 } else { next };
            let mmse = scalar_mse(&ScalarChannel::new(noise_var + sigma_inf2)?, prior);
            return Ok(FixedPoint { sigma_inf2, mmse });
        }
        sigma2 = next;
    }
    Err(Error::NoConvergence { cap: FIXED_POINT_CAP })
}
