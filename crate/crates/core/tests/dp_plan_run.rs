//! End-to-end check that a DP-planned rate sequence, executed by the lossy
//! row-MP algorithm on generated instances, lands at the SE-predicted MSE,
//! and that the SE-verified terminal excess meets the planning target.

mod common;

use common::mean_stderr_per_index;
use mpamp_core::amp::se_fixed_point;
use mpamp_core::model::{partition_rows, LinearProblem, SignalPrior};
use mpamp_core::rate_dp::{dp_optimize, distortion_ratio_check, execute_plan, theta, DpGrid, RdModel};

#[test]
fn planned_sequence_executes_to_its_predicted_terminal_mse() {
    let prior = SignalPrior::bernoulli_gaussian(0.2).unwrap();
    let kappa = 1.0;
    let noise_var = 0.01;
    let p = 100;
    let b = 0.782;
    let target_db = 0.005;

    // A coarser grid than the default keeps this test quick; feasibility of
    // the extracted plan is still verified against the exact SE inside.
    let fp = se_fixed_point(kappa, noise_var, &prior, 1e-12).unwrap();
    let e_min = fp.sigma_inf2 * 1e-4;
    let e_max = prior.second_moment() / kappa - fp.sigma_inf2;
    let states: Vec<f64> = (0..200)
        .map(|i| fp.sigma_inf2 + e_min * ((e_max / e_min).ln() * i as f64 / 199.0).exp())
        .collect();
    let rates: Vec<f64> = (0..=240).map(|i| i as f64 * 0.05).collect();
    let grid = DpGrid::new(states, rates, target_db).unwrap();
    let out = dp_optimize(kappa, noise_var, &prior, p, b, RdModel::Ecsq, &grid).unwrap();
    assert!(out.terminal_emse_db <= target_db * (1.0 + 1e-6));

    // Tail distortion ratios approach the contraction factor. The 0.05-bit
    // rate grid here quantizes each ratio by a factor 2^(+-0.1), so the
    // bound is looser than on the production grid.
    let th = theta(kappa, &prior, fp.tau_inf2(noise_var)).unwrap();
    let ratios = distortion_ratio_check(&out.plan, &out.se);
    assert!(ratios.len() >= 5);
    let tail = &ratios[ratios.len() - 4..];
    let tail_mean = tail.iter().sum::<f64>() / 4.0;
    assert!(
        (tail_mean - th).abs() <= 0.1,
        "tail distortion ratio {tail_mean:.4} vs theta {th:.4}"
    );

    // Execute the plan on desk-scale instances.
    let n = 2000;
    let partition = partition_rows(n, p).unwrap();
    let trials = 20;
    let mut curves = Vec::with_capacity(trials);
    for trial in 0..trials {
        let problem =
            LinearProblem::generate_for_trial(n, n, &prior, noise_var, 7707, trial as u64).unwrap();
        let run = execute_plan(
            &problem,
            &partition,
            &prior,
            &out.plan,
            true,
            7707 + trial as u64,
        )
        .unwrap();
        curves.push(run.mse_per_iter);
    }
    let stats = mean_stderr_per_index(&curves);
    let (final_mean, final_se) = stats[stats.len() - 1];
    let predicted = out.se.terminal_mse();
    assert!(
        (final_mean - predicted).abs() <= 3.0 * final_se,
        "terminal MSE {final_mean:.5e} vs SE {predicted:.5e} (se {final_se:.2e})"
    );
}
