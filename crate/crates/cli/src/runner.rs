//! Config-driven experiment execution and CSV emission.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use mpamp_core::amp::{amp_run, se_fixed_point, se_run};
use mpamp_core::col_mp::{cmp_run_with, cmp_se_run, Schedule};
use mpamp_core::model::{partition_cols_equal, partition_rows, LinearProblem, SignalPrior};
use mpamp_core::netsim::{Direction, FusionNet, Scheduling};
use mpamp_core::rate_dp::{
    asymptotic_growth_rate, dp_optimize, plan_from_rates, theta, CodingRatePlan, DpGrid, RdModel,
};
use mpamp_core::rng::derived_seed;
use mpamp_core::row_mp::{lossy_se_run, rmp_lossless_run_with, rmp_lossy_run_with};

use crate::config::{Algorithm, ExperimentConfig};
use crate::csvio::{fmt_f64, fmt_opt, fmt_usize, CsvWriter};
use crate::CliError;

const TRACE_HEADER: [&str; 8] = [
    "iteration",
    "outer",
    "inner",
    "empirical_mse_mean",
    "empirical_mse_stderr",
    "se_predicted_mse",
    "rate_bits",
    "distortion",
];

const LEDGER_HEADER: [&str; 3] = ["iteration", "direction", "bits"];

struct TraceRow {
    iteration: usize,
    outer: usize,
    inner: Option<usize>,
    emp_mean: Option<f64>,
    emp_stderr: Option<f64>,
    se_predicted: f64,
    rate_bits: Option<f64>,
    distortion: Option<f64>,
}

/// Files written by a run.
#[derive(Debug, Default)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
}

pub fn scheduling_from_str(s: &str) -> Scheduling {
    match s {
        "reverse" => Scheduling::ReverseOrder,
        "threaded" => Scheduling::Threaded,
        s if s.starts_with("shuffled:") => {
            Scheduling::Shuffled(s["shuffled:".len()..].parse().unwrap_or(0))
        }
        _ => Scheduling::FixedOrder,
    }
}

fn rd_model_from(cfg: &ExperimentConfig) -> RdModel {
    match cfg.run.rd_model.as_deref() {
        Some("shannon") => RdModel::ShannonGaussian,
        _ => RdModel::Ecsq,
    }
}

fn mean_stderr(trials: &[Vec<f64>], index: usize) -> (f64, f64) {
    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t[index]).sum::<f64>() / n;
    if trials.len() < 2 {
        return (mean, 0.0);
    }
    let var = trials
        .iter()
        .map(|t| (t[index] - mean) * (t[index] - mean))
        .sum::<f64>()
        / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn write_trace(path: &Path, rows: &[TraceRow]) -> std::io::Result<()> {
    let mut w = CsvWriter::create(path, &TRACE_HEADER)?;
    for r in rows {
        w.row(&[
            fmt_usize(r.iteration),
            fmt_usize(r.outer),
            r.inner.map(fmt_usize).unwrap_or_default(),
            fmt_opt(r.emp_mean),
            fmt_opt(r.emp_stderr),
            fmt_f64(r.se_predicted),
            fmt_opt(r.rate_bits),
            fmt_opt(r.distortion),
        ])?;
    }
    w.finish()
}

fn write_ledger(path: &Path, net: Option<&FusionNet>) -> std::io::Result<()> {
    let mut w = CsvWriter::create(path, &LEDGER_HEADER)?;
    if let Some(net) = net {
        for row in net.ledger().rows() {
            w.row(&[
                fmt_usize(row.iteration),
                row.direction.as_str().to_string(),
                fmt_f64(row.bits),
            ])?;
        }
    }
    w.finish()
}

/// Execute a validated config; returns the written artifact paths.
pub fn run_config(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let diags = cfg.validate();
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    std::fs::create_dir_all(out_dir)?;
    match cfg.algorithm {
        Algorithm::Amp => run_amp(cfg, out_dir),
        Algorithm::RowLossless => run_row_lossless(cfg, out_dir),
        Algorithm::RowLossy => run_row_lossy(cfg, out_dir),
        Algorithm::Col => {
            if cfg.run.kappa_sweep.is_some() || cfg.run.snr_db_sweep.is_some() {
                run_col_sweep(cfg, out_dir)
            } else {
                run_col(cfg, out_dir)
            }
        }
        Algorithm::SeOnly => run_se_only(cfg, out_dir),
        Algorithm::DpPlan => run_dp_plan(cfg, out_dir),
    }
}

fn problem_for_trial(
    cfg: &ExperimentConfig,
    prior: &SignalPrior,
    noise_var: f64,
    trial: u64,
) -> Result<LinearProblem, CliError> {
    let n = cfg.problem.n.expect("validated");
    let m = cfg.rows().expect("validated");
    Ok(LinearProblem::generate_for_trial(
        n,
        m,
        prior,
        noise_var,
        cfg.problem.seed,
        trial,
    )?)
}

fn run_amp(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let iters = cfg.run.iters.expect("validated");
    let trials = cfg.problem.trials;
    let curves: Result<Vec<Vec<f64>>, CliError> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let problem = problem_for_trial(cfg, &prior, noise_var, trial)?;
            let (_, mses) = amp_run(&problem, &prior, iters)?;
            Ok(mses)
        })
        .collect();
    let curves = curves?;
    let trace = se_run(cfg.kappa().expect("validated"), noise_var, &prior, iters);

    let rows: Vec<TraceRow> = (0..iters)
        .map(|t| {
            let (mean, se) = mean_stderr(&curves, t);
            TraceRow {
                iteration: t + 1,
                outer: t + 1,
                inner: None,
                emp_mean: Some(mean),
                emp_stderr: Some(se),
                se_predicted: trace.entries[t].predicted_mse,
                rate_bits: None,
                distortion: None,
            }
        })
        .collect();
    finish_trace_and_ledger(cfg, out_dir, &rows, None)
}

fn run_row_lossless(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let iters = cfg.run.iters.expect("validated");
    let trials = cfg.problem.trials;
    let scheduling = scheduling_from_str(&cfg.scheduling);
    let partition = partition_rows(cfg.rows().expect("validated"), cfg.problem.p)?;
    let results: Result<Vec<(Vec<f64>, Option<FusionNet>)>, CliError> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let problem = problem_for_trial(cfg, &prior, noise_var, trial)?;
            let mut net = FusionNet::new(scheduling);
            let out = rmp_lossless_run_with(&mut net, &problem, &partition, &prior, iters)?;
            Ok((out.mse_per_iter, (trial == 0).then_some(net)))
        })
        .collect();
    let results = results?;
    let curves: Vec<Vec<f64>> = results.iter().map(|(c, _)| c.clone()).collect();
    let net0 = results.into_iter().find_map(|(_, n)| n);
    let trace = se_run(cfg.kappa().expect("validated"), noise_var, &prior, iters);

    let rows: Vec<TraceRow> = (0..iters)
        .map(|t| {
            let (mean, se) = mean_stderr(&curves, t);
            TraceRow {
                iteration: t + 1,
                outer: t + 1,
                inner: None,
                emp_mean: Some(mean),
                emp_stderr: Some(se),
                se_predicted: trace.entries[t].predicted_mse,
                rate_bits: None,
                distortion: None,
            }
        })
        .collect();
    finish_trace_and_ledger(cfg, out_dir, &rows, net0.as_ref())
}

fn resolve_lossy_plan(cfg: &ExperimentConfig) -> Result<CodingRatePlan, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let kappa = cfg.kappa().expect("validated");
    let p = cfg.problem.p;
    let b = cfg.run.b.unwrap_or(0.0);
    if let Some(d) = &cfg.run.distortions {
        let rates = vec![0.0; d.len()];
        return Ok(CodingRatePlan {
            total_cost: b * d.len() as f64,
            horizon: d.len(),
            rates,
            distortions: d.clone(),
        });
    }
    if let Some(rates) = &cfg.run.rates {
        return Ok(plan_from_rates(
            kappa,
            noise_var,
            &prior,
            p,
            rd_model_from(cfg),
            rates,
            b,
        ));
    }
    let target = cfg.run.target_emse_db.expect("validated");
    let grid = DpGrid::default_for(kappa, noise_var, &prior, target)?;
    let outcome = dp_optimize(kappa, noise_var, &prior, p, b, rd_model_from(cfg), &grid)?;
    Ok(outcome.plan)
}

fn run_row_lossy(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let kappa = cfg.kappa().expect("validated");
    let p = cfg.problem.p;
    let trials = cfg.problem.trials;
    let scheduling = scheduling_from_str(&cfg.scheduling);
    let dithered = cfg.run.dithered.unwrap_or(true);
    let partition = partition_rows(cfg.rows().expect("validated"), p)?;
    let plan = resolve_lossy_plan(cfg)?;
    let iters = plan.horizon;

    struct TrialOut {
        mses: Vec<f64>,
        rd: Vec<(f64, f64)>,
        net: Option<FusionNet>,
    }
    let results: Result<Vec<TrialOut>, CliError> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let problem = problem_for_trial(cfg, &prior, noise_var, trial)?;
            let mut net = FusionNet::new(scheduling);
            let out = rmp_lossy_run_with(
                &mut net,
                &problem,
                &partition,
                &prior,
                &plan.distortions,
                dithered,
                derived_seed(cfg.problem.seed, trial),
            )?;
            Ok(TrialOut {
                mses: out.mse_per_iter,
                rd: out.rd_per_iter,
                net: (trial == 0).then_some(net),
            })
        })
        .collect();
    let results = results?;
    let curves: Vec<Vec<f64>> = results.iter().map(|r| r.mses.clone()).collect();
    let trace = lossy_se_run(kappa, noise_var, &prior, p, &plan.distortions);
    let net0 = results.iter().find_map(|r| r.net.as_ref());

    let rows: Vec<TraceRow> = (0..iters)
        .map(|t| {
            let (mean, se) = mean_stderr(&curves, t);
            let n_trials = results.len() as f64;
            let rate = results.iter().map(|r| r.rd[t].0).sum::<f64>() / n_trials;
            let dist = results.iter().map(|r| r.rd[t].1).sum::<f64>() / n_trials;
            TraceRow {
                iteration: t + 1,
                outer: t + 1,
                inner: None,
                emp_mean: Some(mean),
                emp_stderr: Some(se),
                se_predicted: trace.entries[t].predicted_mse,
                rate_bits: Some(rate),
                distortion: Some(dist),
            }
        })
        .collect();
    finish_trace_and_ledger(cfg, out_dir, &rows, net0)
}

fn run_col(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let schedule = Schedule::new(cfg.run.schedule.clone().expect("validated"))?;
    let trials = cfg.problem.trials;
    let scheduling = scheduling_from_str(&cfg.scheduling);
    let p = cfg.problem.p;
    let n = cfg.problem.n.expect("validated");
    let m = cfg.rows().expect("validated");
    let partition = partition_cols_equal(n, p)?;
    let results: Result<Vec<(Vec<f64>, Option<FusionNet>)>, CliError> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let problem = problem_for_trial(cfg, &prior, noise_var, trial)?;
            let mut net = FusionNet::new(scheduling);
            let (out, _) = cmp_run_with(&mut net, &problem, &partition, &prior, &schedule, false)?;
            Ok((
                out.steps.iter().map(|s| s.mse).collect(),
                (trial == 0).then_some(net),
            ))
        })
        .collect();
    let results = results?;
    let curves: Vec<Vec<f64>> = results.iter().map(|(c, _)| c.clone()).collect();
    let net0 = results.into_iter().find_map(|(_, n)| n);
    let kappas = partition.kappas(m);
    let trace = cmp_se_run(&kappas, noise_var, &prior, &schedule);

    let rows: Vec<TraceRow> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let (mean, se) = mean_stderr(&curves, i);
            TraceRow {
                iteration: i + 1,
                outer: step.outer,
                inner: Some(step.inner),
                emp_mean: Some(mean),
                emp_stderr: Some(se),
                se_predicted: step.global_mse,
                rate_bits: None,
                distortion: None,
            }
        })
        .collect();
    finish_trace_and_ledger(cfg, out_dir, &rows, net0.as_ref())
}

/// Smallest uniform two-inner-iteration schedule whose SE comes within
/// 0.1 dB of the MMSE, capped at 40 outer rounds.
fn auto_schedule(kappas: &[f64], noise_var: f64, prior: &SignalPrior, mmse: f64) -> Schedule {
    let budget_db = 0.1;
    let limit = mmse * 10f64.powf(budget_db / 10.0);
    for outer in 1..=40 {
        let schedule = Schedule::uniform(outer, 2).expect("valid");
        let trace = cmp_se_run(kappas, noise_var, prior, &schedule);
        if trace.final_global_mse() <= limit {
            return schedule;
        }
    }
    Schedule::uniform(40, 2).expect("valid")
}

fn run_col_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let n = cfg.problem.n.expect("validated");
    let p = cfg.problem.p;
    let trials = cfg.problem.trials;
    let scheduling = scheduling_from_str(&cfg.scheduling);
    let partition = partition_cols_equal(n, p)?;
    let kappas_sweep = cfg
        .run
        .kappa_sweep
        .clone()
        .unwrap_or_else(|| vec![cfg.kappa().expect("validated")]);
    let snrs = cfg
        .run
        .snr_db_sweep
        .clone()
        .or_else(|| cfg.problem.snr_db.map(|s| vec![s]))
        .ok_or_else(|| {
            CliError::Invalid(vec![crate::config::Diagnostic {
                field: "run.snr_db_sweep".into(),
                message: "sweep requires snr_db or snr_db_sweep".into(),
            }])
        })?;

    let path = out_dir.join(format!("{}_sweep.csv", cfg.output_stem));
    let mut w = CsvWriter::create(
        &path,
        &[
            "kappa",
            "snr_db",
            "m",
            "outer_iters",
            "trials",
            "final_mse_mean",
            "final_mse_stderr",
            "final_mse_db",
            "mmse",
            "mmse_db",
            "gap_db",
        ],
    )?;
    for &kappa in &kappas_sweep {
        for &snr_db in &snrs {
            let m = (kappa * n as f64).round() as usize;
            let noise_var = cfg.noise_var_for(kappa, snr_db).expect("validated");
            let kappas = partition.kappas(m);
            let fp = se_fixed_point(kappa, noise_var, &prior, 1e-10)?;
            let schedule = match &cfg.run.schedule {
                Some(s) => Schedule::new(s.clone())?,
                None => auto_schedule(&kappas, noise_var, &prior, fp.mmse),
            };
            let finals: Result<Vec<Vec<f64>>, CliError> = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let problem = LinearProblem::generate_for_trial(
                        n,
                        m,
                        &prior,
                        noise_var,
                        derived_seed(cfg.problem.seed, (kappa.to_bits() >> 1) ^ snr_db.to_bits()),
                        trial,
                    )?;
                    let mut net = FusionNet::new(scheduling);
                    let (out, _) =
                        cmp_run_with(&mut net, &problem, &partition, &prior, &schedule, false)?;
                    Ok(vec![out.steps.last().expect("nonempty").mse])
                })
                .collect();
            let finals = finals?;
            let (mean, se) = mean_stderr(&finals, 0);
            let final_db = 10.0 * mean.log10();
            let mmse_db = 10.0 * fp.mmse.log10();
            w.row(&[
                fmt_f64(kappa),
                fmt_f64(snr_db),
                fmt_usize(m),
                fmt_usize(schedule.outer_count()),
                fmt_usize(trials),
                fmt_f64(mean),
                fmt_f64(se),
                fmt_f64(final_db),
                fmt_f64(fp.mmse),
                fmt_f64(mmse_db),
                fmt_f64(final_db - mmse_db),
            ])?;
        }
    }
    w.finish()?;
    Ok(RunArtifacts { files: vec![path] })
}

fn run_se_only(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let iters = cfg.run.iters.expect("validated");
    let trace = se_run(cfg.kappa().expect("validated"), noise_var, &prior, iters);
    let rows: Vec<TraceRow> = trace
        .entries
        .iter()
        .take(iters)
        .enumerate()
        .map(|(t, e)| TraceRow {
            iteration: t + 1,
            outer: t + 1,
            inner: None,
            emp_mean: None,
            emp_stderr: None,
            se_predicted: e.predicted_mse,
            rate_bits: None,
            distortion: None,
        })
        .collect();
    finish_trace_and_ledger(cfg, out_dir, &rows, None)
}

fn run_dp_plan(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let prior = cfg.prior().expect("validated");
    let noise_var = cfg.noise_var().expect("validated");
    let kappa = cfg.kappa().expect("validated");
    let p = cfg.problem.p;
    let b = cfg.run.b.expect("validated");
    let target = cfg.run.target_emse_db.expect("validated");
    let grid = DpGrid::default_for(kappa, noise_var, &prior, target)?;
    let outcome = dp_optimize(kappa, noise_var, &prior, p, b, rd_model_from(cfg), &grid)?;

    let plan_path = out_dir.join(format!("{}_plan.csv", cfg.output_stem));
    let mut w = CsvWriter::create(
        &plan_path,
        &["iteration", "rate_bits", "distortion", "se_sigma2", "se_predicted_mse"],
    )?;
    for (t, entry) in outcome.se.entries.iter().enumerate() {
        w.row(&[
            fmt_usize(t + 1),
            fmt_f64(outcome.plan.rates[t]),
            fmt_f64(outcome.plan.distortions[t]),
            fmt_f64(entry.sigma2),
            fmt_f64(entry.predicted_mse),
        ])?;
    }
    w.finish()?;

    let fp = se_fixed_point(kappa, noise_var, &prior, 1e-12)?;
    let th = theta(kappa, &prior, fp.tau_inf2(noise_var))?;
    let growth = asymptotic_growth_rate(th)?;
    let summary_path = out_dir.join(format!("{}_summary.csv", cfg.output_stem));
    let mut w = CsvWriter::create(&summary_path, &["key", "value"])?;
    let mut kv = |k: &str, v: String| w.row(&[k.to_string(), v]);
    kv("horizon", fmt_usize(outcome.plan.horizon))?;
    kv("total_cost", fmt_f64(outcome.plan.total_cost))?;
    kv("sum_rates", fmt_f64(outcome.plan.rates.iter().sum()))?;
    kv("terminal_emse_db", fmt_f64(outcome.terminal_emse_db))?;
    kv("mmse", fmt_f64(outcome.mmse))?;
    kv("theta", fmt_f64(th))?;
    kv("asymptotic_growth_rate_bits", fmt_f64(growth))?;
    if let Some(g) = outcome.plan.tail_growth_rate(6) {
        kv("tail_growth_rate_bits_last6", fmt_f64(g))?;
    }
    w.finish()?;

    let config_path = out_dir.join(format!("{}_run.toml", cfg.output_stem));
    std::fs::write(&config_path, plan_run_config(cfg, kappa, noise_var, &outcome.plan))?;
    Ok(RunArtifacts {
        files: vec![plan_path, summary_path, config_path],
    })
}

/// A ready-to-run row-lossy config executing the planned distortions; used
/// to feed a planned sequence back into the simulator. Instance sizes fall
/// back to a desk-scale default when the planning config had none.
fn plan_run_config(
    cfg: &ExperimentConfig,
    kappa: f64,
    noise_var: f64,
    plan: &CodingRatePlan,
) -> String {
    let p = cfg.problem.p;
    let n = cfg.problem.n.unwrap_or_else(|| 2000usize.div_ceil(p) * p);
    let m = ((kappa * n as f64).round() as usize).div_ceil(p) * p;
    let d_list = plan
        .distortions
        .iter()
        .map(|d| fmt_f64(*d))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "algorithm = \"row-lossy\"\noutput_stem = \"{stem}_run\"\n\n[problem]\nn = {n}\nm = {m}\nrho = {rho}\nnonzero_variance = {v}\nnoise_var = {noise_var}\np = {p}\nseed = {seed}\ntrials = {trials}\n\n[run]\ndistortions = [{d_list}]\n",
        stem = cfg.output_stem,
        rho = cfg.problem.rho.expect("validated"),
        v = cfg.problem.nonzero_variance,
        seed = cfg.problem.seed,
        trials = cfg.problem.trials.max(10),
    )
}

fn finish_trace_and_ledger(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    rows: &[TraceRow],
    net: Option<&FusionNet>,
) -> Result<RunArtifacts, CliError> {
    let trace_path = out_dir.join(format!("{}_trace.csv", cfg.output_stem));
    write_trace(&trace_path, rows)?;
    let ledger_path = out_dir.join(format!("{}_ledger.csv", cfg.output_stem));
    write_ledger(&ledger_path, net)?;
    if let Some(net) = net {
        debug_assert!(net.ledger().total(Direction::NodeToCenter) >= 0.0);
    }
    Ok(RunArtifacts {
        files: vec![trace_path, ledger_path],
    })
}
