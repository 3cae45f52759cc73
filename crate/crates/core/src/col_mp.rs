//! Column-partitioned MP-AMP with outer/inner iteration schedules, its
//! state-evolution recursion, and fixed-point diagnostics.
//!
//! Each node owns a column block of `A` and a slice of the signal. Per outer
//! iteration the fusion center sums the nodes' measurement-space
//! contributions `r^p`; each node then runs its scheduled number of inner
//! AMP-style iterations against the equivalent measurement
//! `y - g_s - (r^p_{s,t} - r^p_{s,0})` before the next exchange.

use std::ops::Range;

use crate::amp::{se_fixed_point, FixedPoint};
use crate::denoise::{eta, eta_prime, scalar_mse, ScalarChannel};
use crate::error::Error;
use crate::linalg::norm_sq;
use crate::model::{ColPartition, LinearProblem, SignalPrior};
use crate::netsim::{FusionNet, Message, Scheduling};
use crate::Result;

/// Inner-iteration counts per outer iteration; `inner.len()` is the outer
/// count `s_hat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    inner: Vec<usize>,
}

impl Schedule {
    pub fn new(inner: Vec<usize>) -> Result<Self> {
        if inner.is_empty() {
            return Err(Error::param("schedule", "need at least one outer iteration"));
        }
        if inner.iter().any(|&t| t == 0) {
            return Err(Error::param("schedule", "inner counts must be >= 1"));
        }
        Ok(Schedule { inner })
    }

    /// `t_hat_s = inner` for `outer` rounds.
    pub fn uniform(outer: usize, inner: usize) -> Result<Self> {
        Schedule::new(vec![inner; outer])
    }

    /// `t_hat_s = s` for `s = 1..=outer`.
    pub fn ramp(outer: usize) -> Result<Self> {
        Schedule::new((1..=outer).collect())
    }

    pub fn outer_count(&self) -> usize {
        self.inner.len()
    }

    pub fn inner_counts(&self) -> &[usize] {
        &self.inner
    }

    pub fn total_inner(&self) -> usize {
        self.inner.iter().sum()
    }
}

/// Node state: the local estimate block plus measurement-space vectors.
#[derive(Debug, Clone)]
pub struct ColNodeState {
    pub range: Range<usize>,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// Snapshots of the estimate after each inner step of the last round.
    x_steps: Vec<Vec<f64>>,
    /// Full (z, r, tau2) traces, kept only when instrumentation is on.
    detail: Option<Vec<InnerDetail>>,
}

impl ColNodeState {
    /// Full per-inner-step traces, present when the run was instrumented.
    pub fn detail(&self) -> Option<&[InnerDetail]> {
        self.detail.as_deref()
    }
}

#[derive(Debug, Clone)]
pub struct InnerDetail {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub r_start: Vec<f64>,
    pub tau2: f64,
}

/// Per-(outer, inner) record from a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmpStepRecord {
    pub outer: usize,
    pub inner: usize,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct CmpRunOutput {
    pub estimate: Vec<f64>,
    pub steps: Vec<CmpStepRecord>,
}

/// One SE step; vectors are indexed by node.
#[derive(Debug, Clone)]
pub struct CmpSeStep {
    pub outer: usize,
    pub inner: usize,
    pub sigma2: Vec<f64>,
    pub tau2: Vec<f64>,
    /// Predicted per-node MSE of `x^p_{s,t+1}`.
    pub predicted_mse: Vec<f64>,
    /// N_p-weighted global MSE.
    pub global_mse: f64,
}

#[derive(Debug, Clone)]
pub struct CmpSeTrace {
    pub steps: Vec<CmpSeStep>,
    /// Block weights `N_p / N`.
    pub weights: Vec<f64>,
}

impl CmpSeTrace {
    pub fn final_global_mse(&self) -> f64 {
        self.steps.last().expect("nonempty trace").global_mse
    }
}

/// Fixed-point diagnostic for C-MP-AMP.
#[derive(Debug, Clone, Copy)]
pub struct CmpFixedPoint {
    /// Stationary full channel variance.
    pub tau2_star: f64,
    /// `|tau2 - (sigma_w^2 + kappa^{-1} MSE(eta, tau2))|` at the fixed point.
    pub residual: f64,
    /// Centralized fixed-point channel variance for comparison.
    pub centralized_tau2: f64,
    pub matches_centralized: bool,
}

fn validate(problem: &LinearProblem, partition: &ColPartition) -> Result<()> {
    if partition.total_cols() != problem.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} columns, problem has {}",
            partition.total_cols(),
            problem.n()
        )));
    }
    Ok(())
}

/// Run C-MP-AMP; returns the assembled estimate and the global MSE after
/// every inner step.
pub fn cmp_run(
    problem: &LinearProblem,
    partition: &ColPartition,
    prior: &SignalPrior,
    schedule: &Schedule,
) -> Result<CmpRunOutput> {
    let mut net = FusionNet::new(Scheduling::FixedOrder);
    cmp_run_with(&mut net, problem, partition, prior, schedule, false).map(|(out, _)| out)
}

/// As [`cmp_run`] but with an explicit harness; with `instrument` the full
/// per-step node traces are returned for bookkeeping checks.
pub fn cmp_run_with(
    net: &mut FusionNet,
    problem: &LinearProblem,
    partition: &ColPartition,
    prior: &SignalPrior,
    schedule: &Schedule,
    instrument: bool,
) -> Result<(CmpRunOutput, Vec<ColNodeState>)> {
    validate(problem, partition)?;
    let m = problem.m();
    let n = problem.n();
    let blow_up = crate::amp::DIVERGENCE_FACTOR * prior.second_moment().max(f64::MIN_POSITIVE);

    let mut nodes: Vec<ColNodeState> = partition
        .ranges()
        .iter()
        .cloned()
        .map(|range| ColNodeState {
            x: vec![0.0; range.len()],
            r: vec![0.0; m],
            range,
            x_steps: Vec::new(),
            detail: instrument.then(Vec::new),
        })
        .collect();

    let mut g = vec![0.0; m];
    let mut steps = Vec::with_capacity(schedule.total_inner());

    for (s_idx, &t_hat) in schedule.inner_counts().iter().enumerate() {
        let s = s_idx + 1;
        let g_ref: &[f64] = &g;
        let node_step = |i: usize, node: &mut ColNodeState| -> Message {
            node.x_steps.clear();
            let r_start = node.r.clone();
            for _ in 0..t_hat {
                // z^p = y - g_s - (r^p - r^p_{s,0})
                let z: Vec<f64> = (0..m)
                    .map(|row| problem.y[row] - g_ref[row] - (node.r[row] - r_start[row]))
                    .collect();
                let tau2 = norm_sq(&z) / m as f64;
                let channel = ScalarChannel::new(tau2).expect("tau2 >= 0");
                let mut u = problem.a.t_matvec_cols(node.range.clone(), &z);
                for (uj, xj) in u.iter_mut().zip(&node.x) {
                    *uj += xj;
                }
                let mut dsum = 0.0;
                for (xj, &uj) in node.x.iter_mut().zip(&u) {
                    *xj = eta(uj, &channel, prior);
                    dsum += eta_prime(uj, &channel, prior);
                }
                let ax = problem.a.matvec_cols(node.range.clone(), &node.x);
                let onsager = dsum / m as f64;
                for (ri, (axi, zi)) in node.r.iter_mut().zip(ax.iter().zip(&z)) {
                    *ri = axi - zi * onsager;
                }
                node.x_steps.push(node.x.clone());
                if let Some(detail) = &mut node.detail {
                    detail.push(InnerDetail {
                        x: node.x.clone(),
                        z,
                        r: node.r.clone(),
                        r_start: r_start.clone(),
                        tau2,
                    });
                }
            }
            Message::ResidualContribution {
                node: i,
                r: node.r.clone(),
            }
        };

        let center = |msgs: &[Message]| -> (Vec<f64>, Vec<Message>) {
            let mut g_next = vec![0.0; m];
            for msg in msgs {
                match msg {
                    Message::ResidualContribution { r, .. } => {
                        for (gi, ri) in g_next.iter_mut().zip(r) {
                            *gi += ri;
                        }
                    }
                    _ => unreachable!("column-MP nodes send residual contributions"),
                }
            }
            let bcast = Message::GlobalResidualSum { g: g_next.clone() };
            (g_next, vec![bcast])
        };

        g = net.run_round(s, &mut nodes, node_step, center)?;

        // Global MSE per inner step, assembled from the node snapshots.
        for t in 0..t_hat {
            let mut err_sq = 0.0;
            for node in &nodes {
                let truth = &problem.x_true[node.range.clone()];
                err_sq += node.x_steps[t]
                    .iter()
                    .zip(truth)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
            let err = err_sq / n as f64;
            if !err.is_finite() || err > blow_up {
                return Err(Error::Diverged {
                    iteration: s,
                    detail: format!("global MSE {err:e} at inner step {t}"),
                });
            }
            steps.push(CmpStepRecord {
                outer: s,
                inner: t,
                mse: err,
            });
        }
    }

    let mut estimate = vec![0.0; n];
    for node in &nodes {
        estimate[node.range.clone()].copy_from_slice(&node.x);
    }
    Ok((CmpRunOutput { estimate, steps }, nodes))
}

/// SE recursion over a schedule; per-node sequences evolve as
/// `sigma^p_{s,0} = sigma^p_{s-1,end}`,
/// `tau^p_{s,t} = sigma_w^2 + sum_u sigma^u_{s,0} + (sigma^p_{s,t} - sigma^p_{s,0})`,
/// `sigma^p_{s,t+1} = MSE(eta, tau^p_{s,t}) / kappa_p`.
pub fn cmp_se_run(
    kappas: &[f64],
    noise_var: f64,
    prior: &SignalPrior,
    schedule: &Schedule,
) -> CmpSeTrace {
    assert!(!kappas.is_empty() && kappas.iter().all(|&k| k > 0.0));
    assert!(noise_var >= 0.0);
    let p = kappas.len();
    let inv_sum: f64 = kappas.iter().map(|k| 1.0 / k).sum();
    let weights: Vec<f64> = kappas.iter().map(|k| (1.0 / k) / inv_sum).collect();
    let m2 = prior.second_moment();

    let mut sigma2: Vec<f64> = kappas.iter().map(|k| m2 / k).collect();
    let mut steps = Vec::with_capacity(schedule.total_inner());
    for (s_idx, &t_hat) in schedule.inner_counts().iter().enumerate() {
        let sigma2_start = sigma2.clone();
        let start_sum: f64 = sigma2_start.iter().sum();
        for t in 0..t_hat {
            let mut tau2 = Vec::with_capacity(p);
            let mut predicted = Vec::with_capacity(p);
            let mut global = 0.0;
            for q in 0..p {
                let tau2_q = noise_var + start_sum + (sigma2[q] - sigma2_start[q]);
                let mse_q = scalar_mse(&ScalarChannel::new(tau2_q).expect("tau2 >= 0"), prior);
                tau2.push(tau2_q);
                predicted.push(mse_q);
                global += weights[q] * mse_q;
            }
            let entering = sigma2.clone();
            for q in 0..p {
                sigma2[q] = predicted[q] / kappas[q];
            }
            steps.push(CmpSeStep {
                outer: s_idx + 1,
                inner: t,
                sigma2: entering,
                tau2,
                predicted_mse: predicted,
                global_mse: global,
            });
        }
    }
    CmpSeTrace { steps, weights }
}

const FIXED_POINT_CAP: usize = 10_000;
const SIGMA2_FLOOR: f64 = 1e-250;

/// Iterate the SE with `t_hat_s = 1` until stationary; verify the
/// split-invariant fixed-point equation and compare against the centralized
/// fixed point.
pub fn cmp_fixed_point_check(
    kappas: &[f64],
    noise_var: f64,
    prior: &SignalPrior,
    tol: f64,
) -> Result<CmpFixedPoint> {
    if kappas.is_empty() || kappas.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::param("kappas", "need positive per-node rates"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be > 0, got {tol}")));
    }
    let m2 = prior.second_moment();
    let mut sigma2: Vec<f64> = kappas.iter().map(|k| m2 / k).collect();
    let mut tau2 = noise_var + sigma2.iter().sum::<f64>();
    for _ in 0..FIXED_POINT_CAP {
        // One outer round with a single inner iteration: tau is common.
        let mse = scalar_mse(&ScalarChannel::new(tau2)?, prior);
        for (s, k) in sigma2.iter_mut().zip(kappas) {
            *s = mse / k;
        }
        let next = noise_var + sigma2.iter().sum::<f64>();
        let done = (next - tau2).abs() <= tol * tau2 || (next - noise_var) <= SIGMA2_FLOOR;
        tau2 = next;
        if done {
            let inv_kappa: f64 = kappas.iter().map(|k| 1.0 / k).sum();
            let kappa_total = 1.0 / inv_kappa;
            let step = noise_var + scalar_mse(&ScalarChannel::new(tau2)?, prior) / kappa_total;
            let residual = (step - tau2).abs();
            let centralized: FixedPoint = se_fixed_point(kappa_total, noise_var, prior, tol)?;
            let centralized_tau2 = centralized.tau_inf2(noise_var);
            return Ok(CmpFixedPoint {
                tau2_star: tau2,
                residual,
                centralized_tau2,
                matches_centralized: (tau2 - centralized_tau2).abs() <= tol.max(1e-12),
            });
        }
    }
    Err(Error::NoConvergence { cap: FIXED_POINT_CAP })
}
