//! Row-partitioned MP-AMP: the lossless variant (equivalent to centralized
//! AMP), the lossy variant with per-iteration quantization of the node
//! pseudo-data, and the lossy SE predictor.
//!
//! Each node p keeps the residual block `z^p` for its rows and sends the
//! pseudo-data `f^p = x/P + (a^p)^T z^p` upstream; the fusion center sums
//! the messages in fixed node order, denoises, and broadcasts the new
//! estimate. The fusion-center broadcast is never compressed.

use std::ops::Range;

use crate::denoise::{eta, eta_prime, scalar_mse, ScalarChannel};
use crate::error::Error;
use crate::linalg::{mse, norm_sq};
use crate::model::{LinearProblem, RowPartition, SignalPrior};
use crate::netsim::{Direction, FusionNet, Message, Scheduling};
use crate::quantize::{quantize, step_for_distortion, QuantizerSpec};
use crate::rng;
use crate::Result;

/// Per-node state: the residual block for the node's rows, plus the last
/// quantization error kept for instrumentation (not transmitted).
#[derive(Debug, Clone)]
pub struct RowNodeState {
    pub range: Range<usize>,
    pub z: Vec<f64>,
    quant_error: Option<Vec<f64>>,
}

/// Output of a lossless row-MP run.
#[derive(Debug, Clone)]
pub struct RowRunOutput {
    pub estimate: Vec<f64>,
    pub mse_per_iter: Vec<f64>,
    /// Final channel-variance estimate `sum_p ||z^p||^2 / M`.
    pub sigma2_hat: f64,
}

/// Output of a lossy row-MP run.
#[derive(Debug, Clone)]
pub struct RowLossyOutput {
    pub estimate: Vec<f64>,
    pub mse_per_iter: Vec<f64>,
    /// Per-iteration mean measured (rate, distortion) across nodes; raw
    /// (unquantized) iterations report the raw bits-per-entry charge.
    pub rd_per_iter: Vec<(f64, f64)>,
    /// Per-iteration empirical variance of the fusion-sum quantization error
    /// `f_Q - f` (zero for raw iterations).
    pub quant_noise_var_per_iter: Vec<f64>,
    /// Total node-to-center bits across all iterations.
    pub total_bits: f64,
}

/// One step of the lossy SE recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossySeEntry {
    /// Channel term excluding measurement noise.
    pub sigma2: f64,
    /// Planned per-node distortion for this iteration.
    pub d: f64,
    /// Effective channel variance `sigma_w^2 + sigma2 + P d`.
    pub effective_tau2: f64,
    /// Predicted signal MSE of the next estimate.
    pub predicted_mse: f64,
}

#[derive(Debug, Clone)]
pub struct LossySeTrace {
    pub entries: Vec<LossySeEntry>,
}

impl LossySeTrace {
    pub fn terminal_mse(&self) -> f64 {
        self.entries.last().expect("nonempty trace").predicted_mse
    }
}

/// `||z||^2 / M`, the empirical channel-variance estimate.
pub fn estimate_sigma2(z: &[f64]) -> f64 {
    assert!(!z.is_empty(), "estimate_sigma2: empty residual");
    norm_sq(z) / z.len() as f64
}

fn validate(problem: &LinearProblem, partition: &RowPartition) -> Result<()> {
    if partition.total_rows() != problem.m() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} rows, problem has {}",
            partition.total_rows(),
            problem.m()
        )));
    }
    Ok(())
}

/// What each node does with its pseudo-data before transmitting.
#[derive(Debug, Clone, Copy)]
enum LossyPolicy<'a> {
    /// Realize the planned per-iteration distortion via the model inverse
    /// against the node's measured pseudo-data variance. `d = 0` sends raw.
    PlannedDistortions(&'a [f64], bool),
    /// Fixed quantizer step per iteration (`step <= 0` sends raw).
    ExplicitSteps(&'a [f64], bool),
}

impl LossyPolicy<'_> {
    fn len(&self) -> usize {
        match self {
            LossyPolicy::PlannedDistortions(d, _) => d.len(),
            LossyPolicy::ExplicitSteps(s, _) => s.len(),
        }
    }

    /// Quantizer spec for iteration `t` (1-based) given the node's
    /// pseudo-data second moment; `None` means send raw.
    fn spec_for(&self, t: usize, source_var: f64) -> Option<QuantizerSpec> {
        match self {
            LossyPolicy::PlannedDistortions(d_seq, dithered) => {
                let target = d_seq[t - 1];
                if target <= 0.0 || source_var <= 0.0 {
                    return None;
                }
                let step = step_for_distortion(source_var, target.min(source_var))
                    .expect("target clamped into range");
                Some(QuantizerSpec::new(step, *dithered).expect("positive step"))
            }
            LossyPolicy::ExplicitSteps(steps, dithered) => {
                let step = steps[t - 1];
                if step <= 0.0 {
                    return None;
                }
                Some(QuantizerSpec::new(step, *dithered).expect("positive step"))
            }
        }
    }
}

struct CenterOut {
    x_next: Vec<f64>,
    g: f64,
    sigma2_hat: f64,
    err: f64,
    mean_rate: f64,
    mean_distortion: f64,
}

/// Lossless R-MP-AMP with the default fixed-order schedule.
pub fn rmp_lossless_run(
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    iters: usize,
) -> Result<RowRunOutput> {
    let mut net = FusionNet::new(Scheduling::FixedOrder);
    rmp_lossless_run_with(&mut net, problem, partition, prior, iters)
}

pub fn rmp_lossless_run_with(
    net: &mut FusionNet,
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    iters: usize,
) -> Result<RowRunOutput> {
    let out = run_rounds(net, problem, partition, prior, None, 0, iters)?;
    Ok(RowRunOutput {
        estimate: out.estimate,
        mse_per_iter: out.mse_per_iter,
        sigma2_hat: out.sigma2_hat,
    })
}

/// Lossy R-MP-AMP realizing the planned per-iteration distortions
/// (`plan_distortions[t] = 0` sends that iteration raw). `seed` drives the
/// per-(iteration, node) dither substreams.
pub fn rmp_lossy_run(
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    plan_distortions: &[f64],
    dithered: bool,
    seed: u64,
) -> Result<RowLossyOutput> {
    let mut net = FusionNet::new(Scheduling::FixedOrder);
    rmp_lossy_run_with(
        &mut net,
        problem,
        partition,
        prior,
        plan_distortions,
        dithered,
        seed,
    )
}

pub fn rmp_lossy_run_with(
    net: &mut FusionNet,
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    plan_distortions: &[f64],
    dithered: bool,
    seed: u64,
) -> Result<RowLossyOutput> {
    let policy = LossyPolicy::PlannedDistortions(plan_distortions, dithered);
    run_lossy(net, problem, partition, prior, policy, seed)
}

/// Lossy R-MP-AMP with explicit per-iteration quantizer steps.
pub fn rmp_lossy_run_steps(
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    steps: &[f64],
    dithered: bool,
    seed: u64,
) -> Result<RowLossyOutput> {
    let mut net = FusionNet::new(Scheduling::FixedOrder);
    let policy = LossyPolicy::ExplicitSteps(steps, dithered);
    run_lossy(&mut net, problem, partition, prior, policy, seed)
}

fn run_lossy(
    net: &mut FusionNet,
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    policy: LossyPolicy<'_>,
    seed: u64,
) -> Result<RowLossyOutput> {
    let iters = policy.len();
    let out = run_rounds(net, problem, partition, prior, Some(policy), seed, iters)?;
    Ok(RowLossyOutput {
        estimate: out.estimate,
        mse_per_iter: out.mse_per_iter,
        rd_per_iter: out.rd_per_iter,
        quant_noise_var_per_iter: out.quant_noise_var_per_iter,
        total_bits: out.total_bits,
    })
}

struct RoundsOutput {
    estimate: Vec<f64>,
    mse_per_iter: Vec<f64>,
    rd_per_iter: Vec<(f64, f64)>,
    quant_noise_var_per_iter: Vec<f64>,
    total_bits: f64,
    sigma2_hat: f64,
}

fn run_rounds(
    net: &mut FusionNet,
    problem: &LinearProblem,
    partition: &RowPartition,
    prior: &SignalPrior,
    policy: Option<LossyPolicy<'_>>,
    seed: u64,
    iters: usize,
) -> Result<RoundsOutput> {
    if iters == 0 {
        return Err(Error::param("iters", "need at least one iteration"));
    }
    validate(problem, partition)?;
    let p = partition.node_count();
    let m = problem.m();
    let n = problem.n();
    let kappa = problem.kappa();
    let blow_up = super::amp::DIVERGENCE_FACTOR * prior.second_moment().max(f64::MIN_POSITIVE);
    let raw_bits = net.raw_bits_per_entry();
    let bits_before = net.ledger().total(Direction::NodeToCenter);

    let mut nodes: Vec<RowNodeState> = partition
        .ranges()
        .iter()
        .cloned()
        .map(|range| RowNodeState {
            z: vec![0.0; range.len()],
            range,
            quant_error: None,
        })
        .collect();
    let mut x = vec![0.0; n];
    let mut g = 0.0;
    let mut mse_per_iter = Vec::with_capacity(iters);
    let mut rd_per_iter = Vec::with_capacity(iters);
    let mut quant_noise_var_per_iter = Vec::with_capacity(iters);
    let mut sigma2_hat = 0.0;

    for t in 1..=iters {
        let x_ref: &[f64] = &x;
        let g_cur = g;
        let node_step = |i: usize, node: &mut RowNodeState| -> Message {
            let range = node.range.clone();
            let ax = problem.a.matvec_rows(range.clone(), x_ref);
            for (k, zi) in node.z.iter_mut().enumerate() {
                *zi = problem.y[range.start + k] - ax[k] + (1.0 / kappa) * *zi * g_cur;
            }
            let mut f = problem.a.t_matvec_rows(range, &node.z);
            for (fj, xj) in f.iter_mut().zip(x_ref) {
                *fj = xj / p as f64 + *fj;
            }
            let residual_energy = norm_sq(&node.z);

            let spec = policy.and_then(|pol| {
                let source_var = norm_sq(&f) / n as f64;
                pol.spec_for(t, source_var)
            });
            match spec {
                None => {
                    node.quant_error = None;
                    Message::PseudoData {
                        node: i,
                        data: f,
                        rate_bits_per_symbol: None,
                        distortion: 0.0,
                        residual_energy,
                    }
                }
                Some(spec) => {
                    let mut dither_rng = rng::substream(seed, (t * p + i) as u64);
                    let q = quantize(&f, &spec, &mut dither_rng).expect("nonempty pseudo-data");
                    node.quant_error =
                        Some(q.recon.iter().zip(&f).map(|(r, v)| r - v).collect());
                    Message::PseudoData {
                        node: i,
                        data: q.recon,
                        rate_bits_per_symbol: Some(q.rate_bits_per_symbol),
                        distortion: q.distortion,
                        residual_energy,
                    }
                }
            }
        };

        let center = |msgs: &[Message]| -> (Result<CenterOut>, Vec<Message>) {
            let mut f_sum = vec![0.0; n];
            let mut energy = 0.0;
            let mut rate_sum = 0.0;
            let mut dist_sum = 0.0;
            for msg in msgs {
                match msg {
                    Message::PseudoData {
                        data,
                        rate_bits_per_symbol,
                        distortion,
                        residual_energy,
                        ..
                    } => {
                        for (fj, dj) in f_sum.iter_mut().zip(data) {
                            *fj += dj;
                        }
                        energy += residual_energy;
                        dist_sum += distortion;
                        rate_sum += rate_bits_per_symbol.unwrap_or(raw_bits);
                    }
                    _ => unreachable!("row-MP nodes send pseudo-data"),
                }
            }
            let tau2_hat = energy / m as f64 + dist_sum;
            if !tau2_hat.is_finite() {
                return (
                    Err(Error::Diverged {
                        iteration: t,
                        detail: format!("residual energy {tau2_hat}"),
                    }),
                    Vec::new(),
                );
            }
            let channel = match ScalarChannel::new(tau2_hat) {
                Ok(c) => c,
                Err(e) => return (Err(e), Vec::new()),
            };
            let mut x_next = vec![0.0; n];
            let mut dsum = 0.0;
            for j in 0..n {
                let u = f_sum[j];
                x_next[j] = eta(u, &channel, prior);
                dsum += eta_prime(u, &channel, prior);
            }
            let g_new = dsum / n as f64;
            let err = mse(&x_next, &problem.x_true);
            let bcast = Message::Broadcast {
                x: x_next.clone(),
                g: g_new,
            };
            (
                Ok(CenterOut {
                    x_next,
                    g: g_new,
                    sigma2_hat: tau2_hat,
                    err,
                    mean_rate: rate_sum / p as f64,
                    mean_distortion: dist_sum / p as f64,
                }),
                vec![bcast],
            )
        };

        let out = net.run_round(t, &mut nodes, node_step, center)??;

        if !out.err.is_finite() || out.err > blow_up {
            return Err(Error::Diverged {
                iteration: t,
                detail: format!("empirical MSE {:e}", out.err),
            });
        }
        quant_noise_var_per_iter.push(fusion_error_variance(&nodes, n));
        x = out.x_next;
        g = out.g;
        sigma2_hat = out.sigma2_hat;
        mse_per_iter.push(out.err);
        rd_per_iter.push((out.mean_rate, out.mean_distortion));
    }

    let total_bits = net.ledger().total(Direction::NodeToCenter) - bits_before;
    Ok(RoundsOutput {
        estimate: x,
        mse_per_iter,
        rd_per_iter,
        quant_noise_var_per_iter,
        total_bits,
        sigma2_hat,
    })
}

/// Empirical variance of the summed per-node quantization errors
/// `f_Q - f = sum_p (Q(f^p) - f^p)`; zero when nothing was quantized.
fn fusion_error_variance(nodes: &[RowNodeState], n: usize) -> f64 {
    if nodes.iter().all(|node| node.quant_error.is_none()) {
        return 0.0;
    }
    let mut err = vec![0.0; n];
    for node in nodes {
        if let Some(e) = &node.quant_error {
            for (acc, v) in err.iter_mut().zip(e) {
                *acc += v;
            }
        }
    }
    let mean = err.iter().sum::<f64>() / n as f64;
    err.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64
}

/// Lossy SE: `sigma_{t+1}^2 = MSE(eta, sigma_w^2 + sigma_t^2 + P D_t) / kappa`.
/// With `D_t = 0` this is exactly the centralized recursion.
pub fn lossy_se_run(
    kappa: f64,
    noise_var: f64,
    prior: &SignalPrior,
    p_nodes: usize,
    d_seq: &[f64],
) -> LossySeTrace {
    assert!(kappa > 0.0 && noise_var >= 0.0 && p_nodes >= 1);
    assert!(d_seq.iter().all(|&d| d >= 0.0), "distortions must be >= 0");
    let mut entries = Vec::with_capacity(d_seq.len());
    let mut sigma2 = prior.second_moment() / kappa;
    for &d in d_seq {
        let effective_tau2 = noise_var + sigma2 + p_nodes as f64 * d;
        let step_mse = scalar_mse(
            &ScalarChannel::new(effective_tau2).expect("nonnegative"),
            prior,
        );
        entries.push(LossySeEntry {
            sigma2,
            d,
            effective_tau2,
            predicted_mse: step_mse,
        });
        sigma2 = step_mse / kappa;
    }
    LossySeTrace { entries }
}

/// Distortion sequence with constant normalized distortion
/// `P D_t / tau_t^2 = c`, computed self-consistently through the lossy SE.
pub fn distortion_plan_normalized(
    kappa: f64,
    noise_var: f64,
    prior: &SignalPrior,
    p_nodes: usize,
    c: f64,
    iters: usize,
) -> Vec<f64> {
    assert!(c >= 0.0);
    let mut d_seq = Vec::with_capacity(iters);
    let mut sigma2 = prior.second_moment() / kappa;
    for _ in 0..iters {
        let tau2 = noise_var + sigma2;
        let d = c * tau2 / p_nodes as f64;
        d_seq.push(d);
        let eff = tau2 + p_nodes as f64 * d;
        sigma2 = scalar_mse(&ScalarChannel::new(eff).expect("nonnegative"), prior) / kappa;
    }
    d_seq
}
