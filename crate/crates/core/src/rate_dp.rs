//! Coding-rate-sequence optimization by dynamic programming against the
//! lossy SE, plus the asymptotic growth-rate diagnostics.
//!
//! The DP state is the SE channel term `sigma^2` on a log-spaced grid; the
//! action is the per-iteration coding rate. Choosing rate `R` at state `s`
//! incurs distortion `D = src_var(s) * d_rel(R)` from the RD model, the SE
//! advances to `MSE(eta, sigma_w^2 + s + P D) / kappa`, and the step costs
//! `b + R`. Backward value iteration finds the cheapest path into the
//! terminal set where the estimate MSE is within the EMSE target of the
//! MMSE. Next states are projected *upward* to the nearest grid point, so a
//! plan that is feasible on the grid is feasible under the exact SE as well.

use crate::amp::se_fixed_point;
use crate::denoise::{scalar_mse, scalar_mse_derivative, ScalarChannel};
use crate::error::Error;
use crate::model::SignalPrior;
use crate::quantize::ecsq_unit_step_for_rate;
use crate::row_mp::{lossy_se_run, LossySeTrace};
use crate::Result;

/// Per-iteration coding rates with their planned distortions.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingRatePlan {
    pub rates: Vec<f64>,
    pub distortions: Vec<f64>,
    /// `b * horizon + sum rates`.
    pub total_cost: f64,
    pub horizon: usize,
}

impl CodingRatePlan {
    /// Mean additive growth over the last `span` iterations:
    /// `(R_t_hat - R_{t_hat - span}) / span`.
    pub fn tail_growth_rate(&self, span: usize) -> Option<f64> {
        let t = self.rates.len();
        if span == 0 || t <= span {
            return None;
        }
        Some((self.rates[t - 1] - self.rates[t - 1 - span]) / span as f64)
    }
}

/// Discretization for the DP: log-spaced channel states, a rate action set,
/// and the terminal EMSE target in dB.
#[derive(Debug, Clone)]
pub struct DpGrid {
    pub sigma2_grid: Vec<f64>,
    pub rate_grid: Vec<f64>,
    pub target_emse_db: f64,
}

impl DpGrid {
    pub fn new(sigma2_grid: Vec<f64>, rate_grid: Vec<f64>, target_emse_db: f64) -> Result<Self> {
        if sigma2_grid.len() < 2 || sigma2_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("sigma2_grid", "need an ascending grid"));
        }
        if sigma2_grid[0] <= 0.0 {
            return Err(Error::param("sigma2_grid", "states must be positive"));
        }
        if rate_grid.is_empty() || rate_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("rate_grid", "need an ascending action set"));
        }
        if rate_grid.iter().any(|&r| r < 0.0) {
            return Err(Error::param("rate_grid", "rates must be >= 0"));
        }
        if !(target_emse_db > 0.0) {
            return Err(Error::param("target_emse_db", "target must be > 0"));
        }
        Ok(DpGrid {
            sigma2_grid,
            rate_grid,
            target_emse_db,
        })
    }

    /// Default discretization: 400 states from just above the fixed point to
    /// the SE initialization, log-spaced in the excess `sigma^2 - sigma_inf^2`
    /// so the contraction toward the fixed point stays resolved at every
    /// scale; rates 0..=12 in 0.02 steps.
    pub fn default_for(
        kappa: f64,
        noise_var: f64,
        prior: &SignalPrior,
        target_emse_db: f64,
    ) -> Result<Self> {
        let fp = se_fixed_point(kappa, noise_var, prior, 1e-12)?;
        if fp.sigma_inf2 <= 0.0 {
            return Err(Error::UnreachableTarget {
                target_db: target_emse_db,
                reason: "SE fixed point is zero; EMSE target is undefined".into(),
            });
        }
        let e_min = fp.sigma_inf2 * 1e-4;
        let e_max = prior.second_moment() / kappa - fp.sigma_inf2;
        if e_max <= e_min {
            return Err(Error::UnreachableTarget {
                target_db: target_emse_db,
                reason: "SE initialization is already at the fixed point".into(),
            });
        }
        let points = 400;
        let ratio = (e_max / e_min).ln();
        let sigma2_grid: Vec<f64> = (0..points)
            .map(|i| fp.sigma_inf2 + e_min * (ratio * i as f64 / (points - 1) as f64).exp())
            .collect();
        let rate_grid: Vec<f64> = (0..=600).map(|i| i as f64 * 0.02).collect();
        DpGrid::new(sigma2_grid, rate_grid, target_emse_db)
    }
}

/// Rate-distortion model used to translate a coding rate into a per-node
/// distortion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdModel {
    /// Shannon limit for a Gaussian source: `D = src_var 2^{-2R}`.
    ShannonGaussian,
    /// Model curve of uniform dithered ECSQ on a Gaussian source.
    Ecsq,
}

impl RdModel {
    /// Relative distortion `D / src_var` at rate `r`.
    pub fn d_rel(&self, r: f64) -> f64 {
        match self {
            RdModel::ShannonGaussian => 0.25f64.powf(r),
            RdModel::Ecsq => ecsq_unit_step_for_rate(r).1,
        }
    }
}

/// DP result: the plan plus its exact-SE verification.
#[derive(Debug, Clone)]
pub struct DpOutcome {
    pub plan: CodingRatePlan,
    /// `10 log10(1 + EMSE/MMSE)` of the plan under the exact lossy SE.
    pub terminal_emse_db: f64,
    pub se: LossySeTrace,
    /// MMSE of the lossless fixed point, the EMSE reference.
    pub mmse: f64,
}

/// Second moment of the per-node pseudo-data `f^p = x/P + (a^p)^T z^p`
/// modeled from the SE state: estimate power spread over P^2 plus the
/// residual channel power spread over P.
///
/// The rate planner evaluates this at the SE fixed point and keeps it
/// constant across iterations (the steady-state encoder normalization);
/// with a per-iteration source variance the additive rate increments pick
/// up a spurious `-0.5 log2(src_t / src_{t+1})` sag while the source is
/// still shrinking, which distorts the mid-horizon growth rate.
pub fn pseudo_data_variance(
    kappa: f64,
    noise_var: f64,
    prior: &SignalPrior,
    p_nodes: usize,
    sigma2: f64,
) -> f64 {
    let m2 = prior.second_moment();
    let est_power = (m2 - (kappa * sigma2).min(m2)).max(0.0);
    let p = p_nodes as f64;
    est_power / (p * p) + (noise_var + sigma2) / p
}

const VALUE_SWEEP_CAP: usize = 4000;
const REACHABILITY_CAP: usize = 10_000;
const COST_EPS: f64 = 1e-9;
const TERMINAL: u32 = u32::MAX;

/// Optimize the coding-rate sequence: minimize `b * t_hat + sum_t R_t`
/// subject to the lossy SE reaching the EMSE target in `grid.target_emse_db`.
pub fn dp_optimize(
    kappa: f64,
    noise_var: f64,
    prior: &SignalPrior,
    p_nodes: usize,
    b: f64,
    rd_model: RdModel,
    grid: &DpGrid,
) -> Result<DpOutcome> {
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", "must be > 0"));
    }
    if !(b >= 0.0) {
        return Err(Error::param("b", "cost ratio must be >= 0"));
    }
    if p_nodes == 0 {
        return Err(Error::param("p_nodes", "need at least one node"));
    }
    let target_db = grid.target_emse_db;
    let fp = se_fixed_point(kappa, noise_var, prior, 1e-12)?;
    if fp.mmse <= 0.0 {
        return Err(Error::UnreachableTarget {
            target_db,
            reason: "MMSE is zero; the EMSE ratio is undefined".into(),
        });
    }
    let threshold_mse = fp.mmse * 10f64.powf(target_db / 10.0);

    // The target must be reachable at infinite rate (lossless SE).
    let mut s = prior.second_moment() / kappa;
    let mut reachable = false;
    for _ in 0..REACHABILITY_CAP {
        if kappa * s <= threshold_mse {
            reachable = true;
            break;
        }
        s = scalar_mse(&ScalarChannel::new(noise_var + s)?, prior) / kappa;
    }
    if !reachable {
        return Err(Error::UnreachableTarget {
            target_db,
            reason: format!("lossless SE stalls above the target within {REACHABILITY_CAP} iterations"),
        });
    }

    let states = &grid.sigma2_grid;
    let rates = &grid.rate_grid;
    let n_states = states.len();
    let n_rates = rates.len();
    let d_rel: Vec<f64> = rates.iter().map(|&r| rd_model.d_rel(r)).collect();

    // Steady-state source variance for the rate -> distortion map.
    let src_var = pseudo_data_variance(kappa, noise_var, prior, p_nodes, fp.sigma_inf2);

    // Transition table with upward nearest-grid projection; TERMINAL marks a
    // one-step exact crossing of the target.
    let mut next = vec![0u32; n_states * n_rates];
    for (i, &si) in states.iter().enumerate() {
        for (a, _) in rates.iter().enumerate() {
            let d = src_var * d_rel[a];
            let eff = noise_var + si + p_nodes as f64 * d;
            let s_next = scalar_mse(&ScalarChannel::new(eff)?, prior) / kappa;
            next[i * n_rates + a] = if kappa * s_next <= threshold_mse {
                TERMINAL
            } else {
                match states.binary_search_by(|x| x.partial_cmp(&s_next).unwrap()) {
                    Ok(j) => j as u32,
                    Err(j) => (j.min(n_states - 1)) as u32,
                }
            };
        }
    }

    // Backward value iteration; V is cost-to-go, T the remaining step count.
    let mut value = vec![f64::INFINITY; n_states];
    let mut steps_left = vec![u32::MAX; n_states];
    let mut policy = vec![u32::MAX; n_states];
    for _ in 0..VALUE_SWEEP_CAP {
        let mut changed = false;
        for i in 0..n_states {
            let mut best_cost = value[i];
            let mut best_steps = steps_left[i];
            let mut best_action = policy[i];
            for a in 0..n_rates {
                let j = next[i * n_rates + a];
                let (tail_cost, tail_steps) = if j == TERMINAL {
                    (0.0, 0u32)
                } else {
                    let j = j as usize;
                    if !value[j].is_finite() || j == i {
                        continue;
                    }
                    (value[j], steps_left[j])
                };
                let cost = b + rates[a] + tail_cost;
                let steps = tail_steps.saturating_add(1);
                let better = cost < best_cost - COST_EPS
                    || ((cost - best_cost).abs() <= COST_EPS
                        && (steps < best_steps
                            || (steps == best_steps
                                && best_action != u32::MAX
                                && rates[a] < rates[best_action as usize])));
                if better {
                    best_cost = cost;
                    best_steps = steps;
                    best_action = a as u32;
                }
            }
            if best_action != policy[i]
                || (best_cost - value[i]).abs() > 0.0
                || best_steps != steps_left[i]
            {
                if best_action != u32::MAX {
                    value[i] = best_cost;
                    steps_left[i] = best_steps;
                    policy[i] = best_action;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Start state: the SE initialization, projected upward like any state.
    let s0 = prior.second_moment() / kappa;
    let i0 = match states.binary_search_by(|x| x.partial_cmp(&s0).unwrap()) {
        Ok(j) => j,
        Err(j) => j.min(n_states - 1),
    };
    if !value[i0].is_finite() {
        return Err(Error::GridTooCoarse(
            "no feasible rate path on the discretized state grid".into(),
        ));
    }

    // Walk the policy, tracking the exact state for the reported distortions.
    let mut plan_rates = Vec::new();
    let mut plan_distortions = Vec::new();
    let mut s_exact = s0;
    let mut i = i0;
    let cap = steps_left[i0] as usize + 8;
    loop {
        if plan_rates.len() > cap {
            return Err(Error::GridTooCoarse(
                "policy walk exceeded the planned horizon".into(),
            ));
        }
        let a = policy[i] as usize;
        let r = rates[a];
        let d = src_var * d_rel[a];
        plan_rates.push(r);
        plan_distortions.push(d);
        let eff = noise_var + s_exact + p_nodes as f64 * d;
        s_exact = scalar_mse(&ScalarChannel::new(eff)?, prior) / kappa;
        let j = next[i * n_rates + a];
        if j == TERMINAL {
            break;
        }
        i = j as usize;
    }

    let horizon = plan_rates.len();
    let total_cost = b * horizon as f64 + plan_rates.iter().sum::<f64>();
    let plan = CodingRatePlan {
        rates: plan_rates,
        distortions: plan_distortions,
        total_cost,
        horizon,
    };

    // Exact-SE verification of the extracted plan.
    let se = lossy_se_run(kappa, noise_var, prior, p_nodes, &plan.distortions);
    let terminal_mse = se.terminal_mse();
    let terminal_emse_db = 10.0 * (terminal_mse / fp.mmse).log10();
    if terminal_emse_db > target_db * (1.0 + 1e-6) {
        return Err(Error::GridTooCoarse(format!(
            "extracted plan reaches {terminal_emse_db:.6} dB, target {target_db} dB"
        )));
    }
    Ok(DpOutcome {
        plan,
        terminal_emse_db,
        se,
        mmse: fp.mmse,
    })
}

/// Build the plan implied by an explicit rate sequence (no optimization):
/// distortions follow the RD model at the steady-state source variance.
pub fn plan_from_rates(
    kappa: f64,
    noise_var: f64,
    prior: &SignalPrior,
    p_nodes: usize,
    rd_model: RdModel,
    rates: &[f64],
    b: f64,
) -> CodingRatePlan {
    let src_var = match se_fixed_point(kappa, noise_var, prior, 1e-12) {
        Ok(fp) => pseudo_data_variance(kappa, noise_var, prior, p_nodes, fp.sigma_inf2),
        // No positive fixed point (noiseless recovery): fall back to the
        // initial-state variance.
        Err(_) => pseudo_data_variance(kappa, noise_var, prior, p_nodes, prior.second_moment() / kappa),
    };
    let distortions = rates
        .iter()
        .map(|&r| src_var * rd_model.d_rel(r.max(0.0)))
        .collect();
    CodingRatePlan {
        total_cost: b * rates.len() as f64 + rates.iter().sum::<f64>(),
        horizon: rates.len(),
        rates: rates.to_vec(),
        distortions,
    }
}

/// Run lossy row-MP-AMP under a coding-rate plan.
pub fn execute_plan(
    problem: &crate::model::LinearProblem,
    partition: &crate::model::RowPartition,
    prior: &SignalPrior,
    plan: &CodingRatePlan,
    dithered: bool,
    seed: u64,
) -> Result<crate::row_mp::RowLossyOutput> {
    crate::row_mp::rmp_lossy_run(problem, partition, prior, &plan.distortions, dithered, seed)
}

/// Contraction factor of the SE fixed point: `theta = MSE'(tau_inf^2) / kappa`,
/// where `tau_inf2` is the converged full channel variance
/// (`noise_var + sigma_inf2`). Values outside (0, 1) are flagged.
pub fn theta(kappa: f64, prior: &SignalPrior, tau_inf2: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", "must be > 0"));
    }
    let slope = scalar_mse_derivative(tau_inf2, prior)?;
    let theta = slope / kappa;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param(
            "theta",
            format!("fixed point not contractive: theta = {theta}"),
        ));
    }
    Ok(theta)
}

/// Asymptotic additive growth rate of the optimal coding-rate sequence:
/// `0.5 log2(1/theta)` bits per iteration.
pub fn asymptotic_growth_rate(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param("theta", format!("must be in (0, 1], got {theta}")));
    }
    Ok(0.5 * (1.0 / theta).log2())
}

/// Successive distortion ratios `D_{t+1}/D_t` of a plan; empty when any
/// distortion is zero (lossless iterations make the ratio undefined).
pub fn distortion_ratio_check(plan: &CodingRatePlan, se: &LossySeTrace) -> Vec<f64> {
    debug_assert_eq!(plan.distortions.len(), se.entries.len());
    if plan.distortions.iter().any(|&d| d <= 0.0) {
        return Vec::new();
    }
    plan.distortions
        .windows(2)
        .map(|w| w[1] / w[0])
        .collect()
}
