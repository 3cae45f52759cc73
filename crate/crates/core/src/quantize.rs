//! Uniform entropy-coded scalar quantization (ECSQ) of inter-node messages.
//!
//! The quantizer is mid-tread (zero is a representation level) with optional
//! subtractive dithering. Rates are accounted as the zeroth-order entropy of
//! the index stream; no actual bitstream is produced. Model curves for a
//! Gaussian source are computed from exact per-bin Gaussian integrals.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::error::Error;
use crate::quadrature::{normal_cdf, normal_pdf};
use crate::rng::Rng;
use crate::Result;

/// Step used when a target distortion saturates at the source variance:
/// everything lands in the zero bin and the rate is (essentially) zero.
pub const RATE_ZERO_STEP_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub step: f64,
    pub dithered: bool,
}

impl QuantizerSpec {
    pub fn new(step: f64, dithered: bool) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param("step", format!("must be > 0, got {step}")));
        }
        Ok(QuantizerSpec { step, dithered })
    }
}

#[derive(Debug, Clone)]
pub struct QuantizedVector {
    pub indices: Vec<i64>,
    pub recon: Vec<f64>,
    /// Empirical zeroth-order entropy of the index stream, bits/symbol.
    pub rate_bits_per_symbol: f64,
    /// Mean squared reconstruction error.
    pub distortion: f64,
}

/// Mid-tread uniform quantization of `v`. With `spec.dithered`, a subtractive
/// dither uniform on (-step/2, step/2] is drawn from `rng` per entry and
/// removed on reconstruction, making the error independent of the source.
pub fn quantize(v: &[f64], spec: &QuantizerSpec, rng: &mut Rng) -> Result<QuantizedVector> {
    if v.is_empty() {
        return Err(Error::EmptyInput("quantize"));
    }
    let step = spec.step;
    let mut indices = Vec::with_capacity(v.len());
    let mut recon = Vec::with_capacity(v.len());
    let mut err_sq = 0.0;
    for &x in v {
        let dither = if spec.dithered {
            (0.5 - rng.gen::<f64>()) * step
        } else {
            0.0
        };
        let k = ((x + dither) / step).round();
        let r = k * step - dither;
        indices.push(k as i64);
        recon.push(r);
        err_sq += (x - r) * (x - r);
    }
    Ok(QuantizedVector {
        rate_bits_per_symbol: empirical_entropy(&indices),
        distortion: err_sq / v.len() as f64,
        indices,
        recon,
    })
}

/// Plug-in entropy (bits/symbol) of an index stream.
pub fn empirical_entropy(indices: &[i64]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &k in indices {
        *counts.entry(k).or_insert(0) += 1;
    }
    let n = indices.len() as f64;
    -counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Shannon rate-distortion function of a Gaussian source:
/// `R(D) = max(0, 0.5 log2(source_var / D))`.
pub fn gaussian_rd(source_var: f64, distortion: f64) -> Result<f64> {
    if !(source_var > 0.0) {
        return Err(Error::param("source_var", format!("must be > 0, got {source_var}")));
    }
    if !(distortion > 0.0) {
        return Err(Error::param("distortion", format!("must be > 0, got {distortion}")));
    }
    Ok((0.5 * (source_var / distortion).log2()).max(0.0))
}

/// Model rate (index entropy, bits) and distortion of the mid-tread uniform
/// quantizer with step `delta` on a unit-variance Gaussian source, from
/// exact per-bin integrals of the Gaussian density.
pub fn ecsq_model_unit(delta: f64) -> (f64, f64) {
    assert!(delta > 0.0 && delta.is_finite());
    // Bins out to ~10 sigma carry all but ~1e-23 of the mass; the outermost
    // pair is extended to infinity so probabilities sum to one exactly.
    let k_max = ((10.0 / delta).ceil() as i64 + 1).max(1);
    let mut entropy = 0.0;
    let mut distortion = 0.0;
    for k in -k_max..=k_max {
        let lo = if k == -k_max {
            f64::NEG_INFINITY
        } else {
            (k as f64 - 0.5) * delta
        };
        let hi = if k == k_max {
            f64::INFINITY
        } else {
            (k as f64 + 0.5) * delta
        };
        let p = normal_cdf(hi) - normal_cdf(lo);
        if p > 0.0 {
            entropy -= p * p.log2();
        }
        distortion += centered_second_moment(lo, hi, k as f64 * delta);
    }
    (entropy, distortion)
}

/// `∫_lo^hi (x - c)^2 φ(x) dx` with infinite limits allowed.
fn centered_second_moment(lo: f64, hi: f64, c: f64) -> f64 {
    let (cdf_lo, pdf_lo, xpdf_lo) = if lo.is_infinite() {
        (0.0, 0.0, 0.0)
    } else {
        (normal_cdf(lo), normal_pdf(lo), lo * normal_pdf(lo))
    };
    let (cdf_hi, pdf_hi, xpdf_hi) = if hi.is_infinite() {
        (1.0, 0.0, 0.0)
    } else {
        (normal_cdf(hi), normal_pdf(hi), hi * normal_pdf(hi))
    };
    let p = cdf_hi - cdf_lo;
    // ∫ x^2 φ = Φ(hi) - Φ(lo) - (hi φ(hi) - lo φ(lo));  ∫ x φ = φ(lo) - φ(hi)
    let second = p - (xpdf_hi - xpdf_lo);
    let first = pdf_lo - pdf_hi;
    second - 2.0 * c * first + c * c * p
}

/// Model `(rate, distortion)` of ECSQ with step `step` on a Gaussian source
/// of variance `source_var`.
pub fn ecsq_model_point(source_var: f64, step: f64) -> Result<(f64, f64)> {
    if !(source_var > 0.0) {
        return Err(Error::param("source_var", format!("must be > 0, got {source_var}")));
    }
    if !(step > 0.0) {
        return Err(Error::param("step", format!("must be > 0, got {step}")));
    }
    let (rate, d_unit) = ecsq_model_unit(step / source_var.sqrt());
    Ok((rate, source_var * d_unit))
}

/// Model `(R, D)` pairs for a grid of step sizes.
pub fn ecsq_rd_curve(source_var: f64, step_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if step_grid.is_empty() {
        return Err(Error::EmptyInput("step_grid"));
    }
    step_grid
        .iter()
        .map(|&s| ecsq_model_point(source_var, s))
        .collect()
}

/// Invert the model distortion map: the step whose model distortion matches
/// `target_d` within ~0.01%. Targets at (or within 1e-6 of) the source
/// variance return the rate-zero sentinel step.
pub fn step_for_distortion(source_var: f64, target_d: f64) -> Result<f64> {
    if !(source_var > 0.0) {
        return Err(Error::param("source_var", format!("must be > 0, got {source_var}")));
    }
    if !(target_d > 0.0) || target_d > source_var * (1.0 + 1e-12) {
        return Err(Error::DistortionOutOfRange {
            target: target_d,
            max: source_var,
        });
    }
    let sd = source_var.sqrt();
    let target_rel = target_d / source_var;
    if target_rel >= 1.0 - 1e-6 {
        return Ok(RATE_ZERO_STEP_FACTOR * sd);
    }
    // Model distortion is monotone increasing in the step; bisect.
    let mut lo = 1e-9;
    let mut hi = RATE_ZERO_STEP_FACTOR;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (_, d) = ecsq_model_unit(mid);
        if d < target_rel {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi) * sd)
}

/// Step realizing a target entropy `rate` (bits/symbol) on a unit-variance
/// Gaussian source, plus the model distortion at that step. `rate <= 0`
/// returns the rate-zero sentinel.
pub fn ecsq_unit_step_for_rate(rate: f64) -> (f64, f64) {
    assert!(rate.is_finite() && rate >= 0.0);
    if rate <= 1e-9 {
        let (_, d) = ecsq_model_unit(RATE_ZERO_STEP_FACTOR);
        return (RATE_ZERO_STEP_FACTOR, d);
    }
    // Entropy is monotone decreasing in the step.
    let mut lo = 1e-9;
    let mut hi = RATE_ZERO_STEP_FACTOR;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (h, _) = ecsq_model_unit(mid);
        if h > rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-12 {
            break;
        }
    }
    let step = 0.5 * (lo + hi);
    let (_, d) = ecsq_model_unit(step);
    (step, d)
}
