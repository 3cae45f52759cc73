//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with its headline numbers and runtime. Run with
//! `cargo test -p mpamp-cli --test acceptance -- --nocapture` to see them.

use std::path::PathBuf;
use std::time::Instant;

use mpamp_cli::{run_config, ExperimentConfig};
use mpamp_core::amp::{amp_run, se_fixed_point, se_run};
use mpamp_core::col_mp::{cmp_fixed_point_check, cmp_run, cmp_se_run, Schedule};
use mpamp_core::denoise::{eta, eta_prime, scalar_mse, ScalarChannel};
use mpamp_core::model::{
    noise_var_from_snr, partition_cols_equal, partition_rows, LinearProblem, SignalPrior,
};
use mpamp_core::quantize::{ecsq_rd_curve, gaussian_rd, quantize, QuantizerSpec};
use mpamp_core::rng::substream;
use mpamp_core::row_mp::{
    distortion_plan_normalized, lossy_se_run, rmp_lossless_run, rmp_lossy_run,
};
use rand::Rng as _;
use rand_distr::Distribution;

struct Criterion {
    index: usize,
    name: &'static str,
    limit_s: f64,
    start: Instant,
}

impl Criterion {
    fn new(index: usize, name: &'static str, limit_s: f64) -> Self {
        Criterion {
            index,
            name,
            limit_s,
            start: Instant::now(),
        }
    }

    fn finish(self, detail: String) {
        let elapsed = self.start.elapsed().as_secs_f64();
        println!(
            "acceptance {:02} {}: PASS ({detail}; {elapsed:.1}s / limit {:.0}s)",
            self.index, self.name, self.limit_s
        );
        assert!(
            elapsed < self.limit_s,
            "criterion {} exceeded its runtime limit: {elapsed:.1}s",
            self.index
        );
    }

    fn check(&self, ok: bool, detail: &str) {
        if !ok {
            println!("acceptance {:02} {}: FAIL ({detail})", self.index, self.name);
        }
        assert!(ok, "criterion {}: {detail}", self.index);
    }
}

fn mean_stderr(trials: &[Vec<f64>], index: usize) -> (f64, f64) {
    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t[index]).sum::<f64>() / n;
    let var = trials
        .iter()
        .map(|t| (t[index] - mean) * (t[index] - mean))
        .sum::<f64>()
        / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mpamp_acceptance_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("create temp dir");
    dir
}

fn csv_column(path: &PathBuf, column: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).expect("read csv");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == column)
        .unwrap_or_else(|| panic!("no column {column}"));
    lines
        .map(|l| {
            let field = l.split(',').nth(idx).expect("field");
            field.parse::<f64>().unwrap_or(f64::NAN)
        })
        .collect()
}

fn csv_kv(path: &PathBuf) -> impl Fn(&str) -> f64 {
    let text = std::fs::read_to_string(path).expect("read csv");
    let map: std::collections::BTreeMap<String, f64> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let mut parts = l.splitn(2, ',');
            let k = parts.next()?.to_string();
            let v = parts.next()?.parse().ok()?;
            Some((k, v))
        })
        .collect();
    move |key: &str| *map.get(key).unwrap_or_else(|| panic!("no key {key}"))
}

#[test]
fn acceptance_01_lossless_equivalence() {
    let c = Criterion::new(1, "lossless row-MP equals centralized AMP", 10.0);
    let prior = SignalPrior::bernoulli_gaussian(0.2).unwrap();
    let problem = LinearProblem::generate(2000, 2000, &prior, 0.01, 1001).unwrap();
    let iters = 12;
    let centralized: Vec<Vec<f64>> = (1..=iters)
        .map(|t| amp_run(&problem, &prior, t).unwrap().0.x)
        .collect();
    let mut worst: f64 = 0.0;
    for p in [1usize, 4, 10] {
        let partition = partition_rows(problem.m(), p).unwrap();
        for t in 1..=iters {
            let out = rmp_lossless_run(&problem, &partition, &prior, t).unwrap();
            let max_abs = centralized[t - 1]
                .iter()
                .zip(&out.estimate)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            worst = worst.max(max_abs);
            c.check(
                max_abs < 1e-10,
                &format!("P={p} iteration {t}: max abs deviation {max_abs:.3e}"),
            );
        }
    }
    c.finish(format!("P in {{1,4,10}}, {iters} iterations, worst deviation {worst:.2e}"));
}

#[test]
fn acceptance_02_centralized_se_tracking() {
    let c = Criterion::new(2, "centralized AMP tracks SE", 120.0);
    let prior = SignalPrior::bernoulli_gaussian(0.1).unwrap();
    let n = 3000;
    let m = 900;
    let noise_var = noise_var_from_snr(15.0, n, m, prior.second_moment());
    let iters = 20;
    let trials = 50;
    let mut curves = Vec::with_capacity(trials);
    for trial in 0..trials {
        let problem =
            LinearProblem::generate_for_trial(n, m, &prior, noise_var, 1002, trial as u64).unwrap();
        let (_, mses) = amp_run(&problem, &prior, iters).unwrap();
        curves.push(mses);
    }
    let trace = se_run(0.3, noise_var, &prior, iters);
    let mut worst_z: f64 = 0.0;
    for t in 0..iters {
        let (mean, se) = mean_stderr(&curves, t);
        let z = (mean - trace.entries[t].predicted_mse).abs() / se;
        worst_z = worst_z.max(z);
        c.check(
            z <= 3.0,
            &format!(
                "iteration {}: mean {mean:.4e} vs SE {:.4e}, |z| = {z:.2}",
                t + 1,
                trace.entries[t].predicted_mse
            ),
        );
    }
    c.finish(format!("50 trials, 20 iterations, worst |z| {worst_z:.2}"));
}

#[test]
fn acceptance_03_cmp_se_tracking_three_schedules() {
    let c = Criterion::new(3, "C-MP-AMP tracks SE across schedules", 300.0);
    let prior = SignalPrior::bernoulli_gaussian(0.1).unwrap();
    let n = 3000;
    let m = 900;
    let p = 3;
    let noise_var = noise_var_from_snr(15.0, n, m, prior.second_moment());
    let partition = partition_cols_equal(n, p).unwrap();
    let kappas = partition.kappas(m);
    let trials = 50;
    let mut worst_z: f64 = 0.0;
    for (k, schedule) in [
        Schedule::uniform(10, 1).unwrap(),
        Schedule::uniform(5, 2).unwrap(),
        Schedule::ramp(4).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let mut curves = Vec::with_capacity(trials);
        for trial in 0..trials {
            let problem = LinearProblem::generate_for_trial(
                n,
                m,
                &prior,
                noise_var,
                1003 + k as u64,
                trial as u64,
            )
            .unwrap();
            let out = cmp_run(&problem, &partition, &prior, schedule).unwrap();
            curves.push(out.steps.iter().map(|s| s.mse).collect::<Vec<f64>>());
        }
        let trace = cmp_se_run(&kappas, noise_var, &prior, schedule);
        for (i, step) in trace.steps.iter().enumerate() {
            let (mean, se) = mean_stderr(&curves, i);
            let z = (mean - step.global_mse).abs() / se;
            worst_z = worst_z.max(z);
            c.check(
                z <= 3.0,
                &format!(
                    "schedule {k} (s={}, t={}): mean {mean:.4e} vs SE {:.4e}, |z| = {z:.2}",
                    step.outer, step.inner, step.global_mse
                ),
            );
        }
    }
    c.finish(format!(
        "schedules (1,1,..),(2,2,..),(1,2,3,4), 50 trials, worst |z| {worst_z:.2}"
    ));
}

#[test]
fn acceptance_04_cmp_achieves_mmse_over_sweep() {
    let c = Criterion::new(4, "C-MP-AMP reaches MMSE over kappa/SNR sweep", 600.0);
    let dir = temp_dir("c04");
    let cfg = ExperimentConfig::parse(mpamp_cli::presets::find("fig3-desk").unwrap().toml).unwrap();
    run_config(&cfg, &dir).unwrap();
    let sweep = dir.join("fig3_desk_sweep.csv");
    let mmse_db = csv_column(&sweep, "mmse_db");
    let gap_db = csv_column(&sweep, "gap_db");
    let kappa = csv_column(&sweep, "kappa");
    let snr = csv_column(&sweep, "snr_db");
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for i in 0..mmse_db.len() {
        if mmse_db[i] < -20.0 {
            checked += 1;
            worst = worst.max(gap_db[i].abs());
            c.check(
                gap_db[i].abs() <= 0.5,
                &format!(
                    "kappa {} snr {} dB: |gap| {:.3} dB exceeds 0.5 dB",
                    kappa[i], snr[i], gap_db[i]
                ),
            );
        }
    }
    c.check(checked >= 3, "too few configurations converge below -20 dB");
    let _ = std::fs::remove_dir_all(&dir);
    c.finish(format!("{checked} configs below -20 dB, worst |gap| {worst:.3} dB"));
}

#[test]
fn acceptance_05_dp_growth_rate_matches_asymptote() {
    let c = Criterion::new(5, "DP coding-rate growth matches the contraction asymptote", 300.0);
    let dir = temp_dir("c05");
    let cfg = ExperimentConfig::parse(mpamp_cli::presets::find("fig1").unwrap().toml).unwrap();
    run_config(&cfg, &dir).unwrap();
    let get = csv_kv(&dir.join("fig1_summary.csv"));
    let horizon = get("horizon");
    let tail = get("tail_growth_rate_bits_last6");
    let asymptote = get("asymptotic_growth_rate_bits");
    let emse = get("terminal_emse_db");
    c.check(horizon >= 12.0, &format!("horizon {horizon} < 12"));
    c.check(
        emse <= 0.005 * (1.0 + 1e-6),
        &format!("terminal EMSE {emse} dB exceeds target"),
    );
    // Tail growth over the last six iterations of the 12-iteration plan is
    // exactly (R12 - R6) / 6.
    c.check(
        (tail - asymptote).abs() <= 0.05,
        &format!("tail {tail:.4} vs asymptote {asymptote:.4}"),
    );
    c.check(
        (tail - 0.742).abs() <= 0.03,
        &format!("tail {tail:.4} vs reference 0.742"),
    );
    // Successive planned distortions contract at the rate theta.
    let theta = get("theta");
    let distortions = csv_column(&dir.join("fig1_plan.csv"), "distortion");
    let ratios: Vec<f64> = distortions.windows(2).map(|w| w[1] / w[0]).collect();
    let tail_ratio = ratios[ratios.len() - 4..].iter().sum::<f64>() / 4.0;
    c.check(
        (tail_ratio - theta).abs() <= 0.05,
        &format!("tail distortion ratio {tail_ratio:.4} vs theta {theta:.4}"),
    );
    let _ = std::fs::remove_dir_all(&dir);
    c.finish(format!(
        "horizon {horizon}, tail {tail:.4}, asymptote {asymptote:.4}, D-ratio {tail_ratio:.3} vs theta {theta:.3}, EMSE {emse:.4} dB"
    ));
}

#[test]
fn acceptance_06_lossy_se_tracking_low_distortion() {
    let c = Criterion::new(6, "lossy row-MP tracks lossy SE at low distortion", 180.0);
    let prior = SignalPrior::bernoulli_gaussian(0.1).unwrap();
    let n = 3000;
    let m = 900;
    let p = 10;
    let kappa = 0.3;
    let noise_var = noise_var_from_snr(15.0, n, m, prior.second_moment());
    let iters = 12;
    let d_seq = distortion_plan_normalized(kappa, noise_var, &prior, p, 0.08, iters);
    let partition = partition_rows(m, p).unwrap();
    let trials = 50;
    let mut mse_curves = Vec::with_capacity(trials);
    let mut qn_curves = Vec::with_capacity(trials);
    for trial in 0..trials {
        let problem =
            LinearProblem::generate_for_trial(n, m, &prior, noise_var, 1006, trial as u64).unwrap();
        let out =
            rmp_lossy_run(&problem, &partition, &prior, &d_seq, true, 1006 + trial as u64).unwrap();
        mse_curves.push(out.mse_per_iter);
        qn_curves.push(out.quant_noise_var_per_iter);
    }
    let trace = lossy_se_run(kappa, noise_var, &prior, p, &d_seq);
    let mut worst_z: f64 = 0.0;
    let mut worst_qn: f64 = 0.0;
    for t in 0..iters {
        let (mean, se) = mean_stderr(&mse_curves, t);
        let z = (mean - trace.entries[t].predicted_mse).abs() / se;
        worst_z = worst_z.max(z);
        c.check(
            z <= 3.0,
            &format!("iteration {}: |z| = {z:.2}", t + 1),
        );
        let (qn_mean, _) = mean_stderr(&qn_curves, t);
        let want = p as f64 * d_seq[t];
        let rel = (qn_mean - want).abs() / want;
        worst_qn = worst_qn.max(rel);
        c.check(
            rel <= 0.10,
            &format!(
                "iteration {}: quantization noise {qn_mean:.3e} vs P D {want:.3e} ({:.1}% off)",
                t + 1,
                100.0 * rel
            ),
        );
    }
    c.finish(format!(
        "P D/tau^2 = 0.08, 50 trials, worst |z| {worst_z:.2}, worst noise error {:.1}%",
        100.0 * worst_qn
    ));
}

#[test]
fn acceptance_07_schedule_and_fixed_point_identities() {
    let c = Criterion::new(7, "single-inner-schedule and fixed-point identities", 10.0);
    let prior = SignalPrior::bernoulli_gaussian(0.1).unwrap();
    let noise_var = 0.01;
    // Single-inner schedules reproduce the centralized SE exactly.
    let schedule = Schedule::uniform(15, 1).unwrap();
    let trace = cmp_se_run(&[0.9, 0.9, 0.9], noise_var, &prior, &schedule);
    let reference = se_run(0.3, noise_var, &prior, 15);
    let mut worst_rel: f64 = 0.0;
    for (step, entry) in trace.steps.iter().zip(&reference.entries) {
        for q in 0..3 {
            let rel = (step.tau2[q] - entry.tau2).abs() / entry.tau2;
            worst_rel = worst_rel.max(rel);
        }
        let rel = (step.global_mse - entry.predicted_mse).abs() / entry.predicted_mse;
        worst_rel = worst_rel.max(rel);
    }
    c.check(
        worst_rel < 1e-13,
        &format!("schedule identity relative error {worst_rel:.2e}"),
    );
    // The C-MP fixed point equals the centralized one for equal and
    // unequal splits.
    let equal = cmp_fixed_point_check(&[0.9, 0.9, 0.9], noise_var, &prior, 1e-10).unwrap();
    let unequal = cmp_fixed_point_check(&[0.6, 1.2, 1.2], noise_var, &prior, 1e-10).unwrap();
    let fp = se_fixed_point(0.3, noise_var, &prior, 1e-10).unwrap();
    let tau_ref = fp.tau_inf2(noise_var);
    for (name, got) in [("equal", &equal), ("unequal", &unequal)] {
        let diff = (got.tau2_star - tau_ref).abs();
        c.check(
            diff <= 1e-8,
            &format!("{name} split fixed point off by {diff:.2e}"),
        );
        c.check(
            got.residual <= 1e-8,
            &format!("{name} split fixed-point residual {:.2e}", got.residual),
        );
    }
    c.finish(format!(
        "schedule identity rel err {worst_rel:.1e}, fixed points within {:.1e} and {:.1e}",
        (equal.tau2_star - tau_ref).abs(),
        (unequal.tau2_star - tau_ref).abs()
    ));
}

mod oracle {
    //! Independent quadrature for the conditional mean (adaptive Simpson on
    //! the posterior), used by criterion 8.

    pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
            (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        }
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fb: f64,
            fm: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = rule(a, m, fa, flm, fm);
            let right = rule(m, b, fm, frm, fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let m = 0.5 * (a + b);
        let fm = f(m);
        rec(f, a, b, fa, fb, fm, rule(a, b, fa, fm, fb), tol, 48)
    }

    pub fn density(x: f64, var: f64) -> f64 {
        (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    pub fn eta(u: f64, tau2: f64, rho: f64, v: f64) -> f64 {
        let gain = v / (v + tau2);
        let center = gain * u;
        let sd = (gain * tau2).sqrt();
        let (lo, hi) = (center - 14.0 * sd, center + 14.0 * sd);
        let num_f = |x: f64| x * density(x, v) * density(u - x, tau2);
        let den_f = |x: f64| density(x, v) * density(u - x, tau2);
        let scale = density(u - center, v + tau2).max(1e-280);
        let num = rho * simpson(&num_f, lo, hi, 1e-15 * scale);
        let den =
            rho * simpson(&den_f, lo, hi, 1e-15 * scale) + (1.0 - rho) * density(u, tau2);
        num / den
    }
}

#[test]
fn acceptance_08_denoiser_oracle_suite() {
    let c = Criterion::new(8, "denoiser oracle agreement", 60.0);
    // Closed form vs quadrature on 100 random points.
    let mut rng = substream(1008, 0);
    let mut worst_eta: f64 = 0.0;
    for _ in 0..100 {
        let rho = rng.gen_range(0.02..0.98);
        let v = rng.gen_range(0.4..2.5);
        let tau2 = rng.gen_range(0.05..2.0);
        let u = rng.gen_range(-6.0..6.0);
        let prior = SignalPrior::new(rho, v).unwrap();
        let channel = ScalarChannel::new(tau2).unwrap();
        let diff = (eta(u, &channel, &prior) - oracle::eta(u, tau2, rho, v)).abs();
        worst_eta = worst_eta.max(diff);
        c.check(
            diff < 1e-8,
            &format!("eta mismatch {diff:.2e} at rho={rho:.3} v={v:.3} tau2={tau2:.3} u={u:.3}"),
        );
    }
    // Derivative vs finite differences on 100 random points.
    let mut worst_fd: f64 = 0.0;
    for _ in 0..100 {
        let rho = rng.gen_range(0.02..0.98);
        let v = rng.gen_range(0.4..2.5);
        let tau2 = rng.gen_range(0.05..2.0);
        let u: f64 = rng.gen_range(-6.0..6.0);
        let prior = SignalPrior::new(rho, v).unwrap();
        let channel = ScalarChannel::new(tau2).unwrap();
        let h = 1e-6 * u.abs().max(1.0);
        let fd = (eta(u + h, &channel, &prior) - eta(u - h, &channel, &prior)) / (2.0 * h);
        let rel = ((eta_prime(u, &channel, &prior) - fd) / fd.abs().max(1e-12)).abs();
        worst_fd = worst_fd.max(rel);
        c.check(rel < 1e-5, &format!("eta' relative error {rel:.2e}"));
    }
    // Quadrature MSE vs 1e7-sample Monte Carlo.
    let prior = SignalPrior::bernoulli_gaussian(0.1).unwrap();
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut worst_z: f64 = 0.0;
    for &tau2 in &[0.2, 0.013] {
        let channel = ScalarChannel::new(tau2).unwrap();
        let tau = tau2.sqrt();
        let mut mc_rng = substream(1008, 7 + tau2.to_bits() % 5);
        let samples = 10_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let x = if mc_rng.gen_bool(0.1) {
                normal.sample(&mut mc_rng)
            } else {
                0.0
            };
            let u = x + tau * normal.sample(&mut mc_rng);
            let d = eta(u, &channel, &prior) - x;
            sum += d * d;
            sum_sq += (d * d) * (d * d);
        }
        let mean = sum / samples as f64;
        let se = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
        let quad = scalar_mse(&channel, &prior);
        let z = ((quad - mean) / se).abs();
        worst_z = worst_z.max(z);
        c.check(
            z <= 3.0,
            &format!("tau2 {tau2}: quadrature {quad:.5e} vs MC {mean:.5e}, |z| = {z:.2}"),
        );
    }
    c.finish(format!(
        "eta worst {worst_eta:.1e}, eta' worst rel {worst_fd:.1e}, MC worst |z| {worst_z:.2}"
    ));
}

#[test]
fn acceptance_09_quantizer_rate_distortion() {
    let c = Criterion::new(9, "ECSQ dominates R(D) with small high-rate gap", 60.0);
    let sd = 1.3;
    let source_var = sd * sd;
    let normal = rand_distr::Normal::new(0.0, sd).unwrap();
    let mut rng = substream(1009, 0);
    let v: Vec<f64> = (0..400_000).map(|_| normal.sample(&mut rng)).collect();
    let mut worst_slack: f64 = f64::INFINITY;
    for (k, &step) in [4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05].iter().enumerate() {
        for dithered in [false, true] {
            let spec = QuantizerSpec::new(step, dithered).unwrap();
            let q = quantize(&v, &spec, &mut substream(1009, 1 + k as u64)).unwrap();
            let bound = gaussian_rd(source_var, q.distortion).unwrap();
            let slack = q.rate_bits_per_symbol - bound;
            worst_slack = worst_slack.min(slack);
            c.check(
                q.rate_bits_per_symbol >= bound - 0.02,
                &format!(
                    "step {step} dithered {dithered}: measured R {:.3} below R(D) {bound:.3}",
                    q.rate_bits_per_symbol
                ),
            );
        }
    }
    // High-rate gap on the model curve.
    let steps: Vec<f64> = (0..60).map(|k| 2.0 * 0.85f64.powi(k)).collect();
    let curve = ecsq_rd_curve(source_var, &steps).unwrap();
    let mut worst_gap: f64 = 0.0;
    for (r, d) in curve {
        if r >= 4.0 {
            let gap = r - gaussian_rd(source_var, d).unwrap();
            worst_gap = worst_gap.max(gap);
            c.check(
                gap < 0.36,
                &format!("rate {r:.2}: ECSQ gap {gap:.3} bits exceeds 0.36"),
            );
        }
    }
    c.finish(format!(
        "measured min slack {worst_slack:.3} bits, high-rate gap at most {worst_gap:.3} bits"
    ));
}

#[test]
fn acceptance_10_deterministic_csv_artifacts() {
    let c = Criterion::new(10, "byte-identical CSVs across runs and schedulings", 60.0);
    let preset = mpamp_cli::presets::find("fig2-desk").unwrap().toml;
    let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
    for (tag, scheduling) in [
        ("fixed_a", "fixed"),
        ("fixed_b", "fixed"),
        ("shuffled", "shuffled:41"),
        ("threaded", "threaded"),
    ] {
        let mut cfg = ExperimentConfig::parse(preset).unwrap();
        cfg.scheduling = scheduling.to_string();
        let dir = temp_dir(&format!("c10_{tag}"));
        run_config(&cfg, &dir).unwrap();
        let trace = std::fs::read(dir.join("fig2_desk_trace.csv")).unwrap();
        let ledger = std::fs::read(dir.join("fig2_desk_ledger.csv")).unwrap();
        match &reference {
            None => reference = Some((trace, ledger)),
            Some((t, l)) => {
                c.check(&trace == t, &format!("trace differs under {scheduling}"));
                c.check(&ledger == l, &format!("ledger differs under {scheduling}"));
            }
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
    // A lossy run with dithering is covered too.
    let lossy = r#"
algorithm = "row-lossy"
output_stem = "det_lossy"
[problem]
n = 600
m = 300
rho = 0.1
snr_db = 15.0
p = 5
seed = 11
trials = 6
[run]
distortions = [0.004, 0.002, 0.001, 0.0005, 0.00025]
"#;
    let mut reference: Option<Vec<u8>> = None;
    for (tag, scheduling) in [("l_fixed", "fixed"), ("l_rev", "reverse"), ("l_thr", "threaded")] {
        let mut cfg = ExperimentConfig::parse(lossy).unwrap();
        cfg.scheduling = scheduling.to_string();
        let dir = temp_dir(&format!("c10_{tag}"));
        run_config(&cfg, &dir).unwrap();
        let mut bytes = std::fs::read(dir.join("det_lossy_trace.csv")).unwrap();
        bytes.extend(std::fs::read(dir.join("det_lossy_ledger.csv")).unwrap());
        match &reference {
            None => reference = Some(bytes),
            Some(b) => c.check(&bytes == b, &format!("lossy artifacts differ under {scheduling}")),
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
    c.finish("fig2-desk x4 schedulings and row-lossy x3 all byte-identical".to_string());
}
