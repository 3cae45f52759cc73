//! Deterministic quadrature: fixed-order Gauss-Hermite and Gauss-Legendre
//! rules (nodes by Newton iteration on the orthonormal recurrences), panel
//! Gaussian expectations for integrands with known sharp features, and
//! standard-normal density helpers. No Monte-Carlo noise anywhere.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Quadrature order used for all state-evolution expectations.
pub const DEFAULT_ORDER: usize = 61;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule of the given order for the weight function `e^{-x^2}`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be >= 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = 1.0 / PI.powf(0.25);
        let m = (n + 1) / 2;
        let mut z = 0.0_f64;
        for i in 0..m {
            // Initial guesses from the asymptotic root layout.
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                // Evaluate the orthonormal Hermite polynomial at z.
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / j as f64).sqrt() * p2 - (((j - 1) as f64) / j as f64).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            if z.abs() < 1e-13 {
                z = 0.0;
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    /// `∫ e^{-x^2} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(Z)]` for standard normal `Z`.
    pub fn expect_std_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let scale = 1.0 / PI.sqrt();
        let root2 = std::f64::consts::SQRT_2;
        scale * self.integrate(|x| f(root2 * x))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Shared rule at [`DEFAULT_ORDER`].
pub fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_ORDER))
}

/// Gauss-Legendre rule on [-1, 1], found by Newton iteration on the
/// Legendre recurrence. Used for panel-wise integration of integrands with
/// known sharp features that a single whole-line rule cannot resolve.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "panel order must be >= 2");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Chebyshev-based initial guess for the i-th root.
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j as f64 - 1.0) * z * p2 - (j as f64 - 1.0) * p3) / j as f64;
                }
                pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f(x) dx`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half
            * self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(mid + half * x))
                .sum::<f64>()
    }
}

/// Panel order for [`gaussian_expect`].
pub const PANEL_ORDER: usize = 24;

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

/// `E[f(U)]` for `U ~ N(0, s2)`, integrated panel by panel.
///
/// `pos_breaks` lists positive abscissae where the integrand has structure
/// (feature edges); panels are mirrored to the negative side and the domain
/// is truncated at `12 * sqrt(s2)` (relative tail mass ~1e-32).
pub fn gaussian_expect(s2: f64, pos_breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    assert!(s2 > 0.0, "gaussian_expect needs positive variance");
    let sd = s2.sqrt();
    let limit = 12.0 * sd;
    let mut edges: Vec<f64> = Vec::with_capacity(2 * pos_breaks.len() + 8);
    edges.push(0.0);
    for &b in pos_breaks {
        if b > 0.0 && b < limit {
            edges.push(b);
        }
    }
    // Gaussian-scale panels so the weight itself is always resolved.
    for k in [1.0, 2.0, 4.0, 8.0] {
        let b = k * sd;
        if b < limit {
            edges.push(b);
        }
    }
    edges.push(limit);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * limit);

    let rule = panel_rule();
    let norm = 1.0 / ((2.0 * PI).sqrt() * sd);
    let weighted = |u: f64| f(u) * (-0.5 * u * u / s2).exp() * norm;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += rule.integrate(pair[0], pair[1], &weighted);
        total += rule.integrate(-pair[1], -pair[0], &weighted);
    }
    total
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
