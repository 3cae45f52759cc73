//! Shared oracle helpers for the integration tests. These deliberately use
//! different algorithms from the library (adaptive Simpson, direct posterior
//! quadrature, Monte Carlo) so the tests are independent checks.
#![allow(dead_code)] // each test binary uses its own subset

use mpamp_core::model::SignalPrior;
use mpamp_core::rng::substream;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

/// Adaptive Simpson integration with panel-exact termination.
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

pub fn normal_density(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Conditional expectation `E[X | X + tau Z = u]` by direct quadrature of
/// the posterior over the Gaussian mixture component; the integration window
/// covers the posterior mass around `gain * u` (the atom contributes only to
/// the evidence).
pub fn eta_oracle(u: f64, tau2: f64, prior: &SignalPrior) -> f64 {
    let rho = prior.rho();
    let v = prior.nonzero_variance();
    if rho == 0.0 {
        return 0.0;
    }
    let gain = v / (v + tau2);
    let center = gain * u;
    let sd = (gain * tau2).sqrt();
    let lo = center - 14.0 * sd;
    let hi = center + 14.0 * sd;
    let num_f = |x: f64| x * normal_density(x, v) * normal_density(u - x, tau2);
    let den_f = |x: f64| normal_density(x, v) * normal_density(u - x, tau2);
    let scale = normal_density(u - center, v + tau2).max(1e-280);
    let num = rho * simpson(&num_f, lo, hi, 1e-15 * scale);
    let den = rho * simpson(&den_f, lo, hi, 1e-15 * scale) + (1.0 - rho) * normal_density(u, tau2);
    num / den
}

/// Monte-Carlo estimate of `E[(eta(X + tau Z) - X)^2]`; returns the sample
/// mean and its standard error.
pub fn mse_monte_carlo(
    tau2: f64,
    prior: &SignalPrior,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    use mpamp_core::denoise::{eta, ScalarChannel};
    let channel = ScalarChannel::new(tau2).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let sd_x = prior.nonzero_variance().sqrt();
    let tau = tau2.sqrt();
    let mut rng = substream(seed, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = if rng.gen_bool(prior.rho()) {
            sd_x * normal.sample(&mut rng)
        } else {
            0.0
        };
        let u = x + tau * normal.sample(&mut rng);
        let d = eta(u, &channel, prior) - x;
        sum += d * d;
        sum_sq += (d * d) * (d * d);
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of the per-trial values at each index.
pub fn mean_stderr_per_index(trials: &[Vec<f64>]) -> Vec<(f64, f64)> {
    assert!(!trials.is_empty());
    let len = trials[0].len();
    let n = trials.len() as f64;
    (0..len)
        .map(|i| {
            let mean = trials.iter().map(|t| t[i]).sum::<f64>() / n;
            let var = trials.iter().map(|t| (t[i] - mean) * (t[i] - mean)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}
