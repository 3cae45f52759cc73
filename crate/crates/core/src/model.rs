//! Problem instances: Bernoulli-Gaussian signals, i.i.d. Gaussian matrices,
//! AWGN measurements, and row/column partitions.

use std::ops::Range;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::Error;
use crate::linalg::Mat;
use crate::rng::{self, Rng};
use crate::Result;

/// Bernoulli-Gaussian signal prior: each coordinate is zero with probability
/// `1 - rho`, otherwise drawn from `N(0, nonzero_variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPrior {
    rho: f64,
    nonzero_variance: f64,
}

impl SignalPrior {
    pub fn new(rho: f64, nonzero_variance: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) || !rho.is_finite() {
            return Err(Error::param("rho", format!("must be in [0, 1], got {rho}")));
        }
        if !(nonzero_variance > 0.0) || !nonzero_variance.is_finite() {
            return Err(Error::param(
                "nonzero_variance",
                format!("must be positive, got {nonzero_variance}"),
            ));
        }
        Ok(SignalPrior {
            rho,
            nonzero_variance,
        })
    }

    /// Prior with unit-variance nonzero component.
    pub fn bernoulli_gaussian(rho: f64) -> Result<Self> {
        SignalPrior::new(rho, 1.0)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nonzero_variance(&self) -> f64 {
        self.nonzero_variance
    }

    /// `E[X^2] = rho * nonzero_variance`.
    pub fn second_moment(&self) -> f64 {
        self.rho * self.nonzero_variance
    }
}

/// A ground-truth linear inverse problem `y = A x + w`.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub a: Mat,
    pub x_true: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub noise_var: f64,
}

impl LinearProblem {
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Measurement rate `kappa = M/N`.
    pub fn kappa(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    /// Generate a full instance; substreams 0..=2 of `seed` drive the signal,
    /// matrix, and noise respectively.
    pub fn generate(
        n: usize,
        m: usize,
        prior: &SignalPrior,
        noise_var: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::generate_for_trial(n, m, prior, noise_var, seed, 0)
    }

    /// As [`generate`](Self::generate) but for trial `trial` of a
    /// multi-trial experiment keyed by `seed`.
    pub fn generate_for_trial(
        n: usize,
        m: usize,
        prior: &SignalPrior,
        noise_var: f64,
        seed: u64,
        trial: u64,
    ) -> Result<Self> {
        let x_true = gen_signal(
            prior,
            n,
            &mut rng::trial_substream(seed, trial, rng::STREAM_SIGNAL),
        )?;
        let a = gen_matrix(m, n, &mut rng::trial_substream(seed, trial, rng::STREAM_MATRIX))?;
        let (y, w) = measure(
            &a,
            &x_true,
            noise_var,
            &mut rng::trial_substream(seed, trial, rng::STREAM_NOISE),
        )?;
        Ok(LinearProblem {
            a,
            x_true,
            w,
            y,
            noise_var,
        })
    }
}

/// Contiguous equal-size row ranges for `P` processor nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowPartition {
    ranges: Vec<Range<usize>>,
}

impl RowPartition {
    pub fn node_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, p: usize) -> Range<usize> {
        self.ranges[p].clone()
    }

    pub fn total_rows(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }
}

/// Contiguous column ranges (sizes `N_p`, not necessarily equal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColPartition {
    ranges: Vec<Range<usize>>,
}

impl ColPartition {
    pub fn node_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, p: usize) -> Range<usize> {
        self.ranges[p].clone()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    pub fn total_cols(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    /// Per-node measurement rates `kappa_p = M / N_p`.
    pub fn kappas(&self, m: usize) -> Vec<f64> {
        self.ranges.iter().map(|r| m as f64 / r.len() as f64).collect()
    }
}

/// Draw a Bernoulli-Gaussian signal of length `n`.
pub fn gen_signal(prior: &SignalPrior, n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("n", "signal length must be >= 1"));
    }
    let normal = Normal::new(0.0, prior.nonzero_variance().sqrt())
        .map_err(|e| Error::param("nonzero_variance", e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            if rng.gen_bool(prior.rho()) {
                normal.sample(rng)
            } else {
                0.0
            }
        })
        .collect())
}

/// Draw an `m x n` matrix with i.i.d. `N(0, 1/m)` entries.
pub fn gen_matrix(m: usize, n: usize, rng: &mut Rng) -> Result<Mat> {
    if m == 0 || n == 0 {
        return Err(Error::param("m, n", "matrix dimensions must be >= 1"));
    }
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("valid std");
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        data.push(normal.sample(rng));
    }
    Ok(Mat::from_vec(m, n, data))
}

/// Measure `y = A x + w` with `w ~ N(0, noise_var I)`; returns `(y, w)`.
pub fn measure(a: &Mat, x: &[f64], noise_var: f64, rng: &mut Rng) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "signal length {} != matrix cols {}",
            x.len(),
            a.cols()
        )));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::param("noise_var", format!("must be >= 0, got {noise_var}")));
    }
    let w: Vec<f64> = if noise_var == 0.0 {
        vec![0.0; a.rows()]
    } else {
        let normal = Normal::new(0.0, noise_var.sqrt()).expect("valid std");
        (0..a.rows()).map(|_| normal.sample(rng)).collect()
    };
    let mut y = a.matvec(x);
    for (yi, wi) in y.iter_mut().zip(&w) {
        *yi += wi;
    }
    Ok((y, w))
}

/// Noise variance for a target SNR: `SNR = 10 log10(N E[X^2] / (M sigma_w^2))`.
pub fn noise_var_from_snr(snr_db: f64, n: usize, m: usize, second_moment: f64) -> f64 {
    (n as f64 * second_moment) / (m as f64 * 10f64.powf(snr_db / 10.0))
}

/// Split `m` rows into `p` contiguous equal blocks; `p` must divide `m`.
pub fn partition_rows(m: usize, p: usize) -> Result<RowPartition> {
    if p == 0 {
        return Err(Error::param("p", "node count must be >= 1"));
    }
    if m == 0 || m % p != 0 {
        return Err(Error::param(
            "p",
            format!("node count {p} must divide row count {m}"),
        ));
    }
    let per = m / p;
    Ok(RowPartition {
        ranges: (0..p).map(|k| k * per..(k + 1) * per).collect(),
    })
}

/// Split `n` columns into contiguous blocks of the given sizes.
pub fn partition_cols(n: usize, sizes: &[usize]) -> Result<ColPartition> {
    if sizes.is_empty() {
        return Err(Error::param("sizes", "need at least one block"));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::param("sizes", "all block sizes must be >= 1"));
    }
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(Error::param(
            "sizes",
            format!("block sizes sum to {total}, expected {n}"),
        ));
    }
    let mut ranges = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        ranges.push(start..start + s);
        start += s;
    }
    Ok(ColPartition { ranges })
}

/// Equal column split; `p` must divide `n`.
pub fn partition_cols_equal(n: usize, p: usize) -> Result<ColPartition> {
    if p == 0 || n % p != 0 {
        return Err(Error::param(
            "p",
            format!("node count {p} must divide column count {n}"),
        ));
    }
    partition_cols(n, &vec![n / p; p])
}
