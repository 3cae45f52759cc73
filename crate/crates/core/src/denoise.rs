//! Bayesian scalar denoiser for the Bernoulli-Gaussian prior.
//!
//! For the channel `U = X + tau Z` with `X ~ rho N(0, v) + (1-rho) delta_0`
//! the conditional expectation has the closed form
//! `eta(u) = pi(u) * u * v / (v + tau^2)`, where `pi(u)` is the posterior
//! probability that `X` is nonzero. `pi` is evaluated in log-space to stay
//! stable for large `|u|` and extreme mixture weights.

use crate::error::Error;
use crate::model::SignalPrior;
use crate::quadrature::gaussian_expect;
use crate::Result;

/// Effective AWGN scalar channel `U = X + tau Z`, `Z ~ N(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarChannel {
    tau2: f64,
}

impl ScalarChannel {
    pub fn new(tau2: f64) -> Result<Self> {
        if !(tau2 >= 0.0) || !tau2.is_finite() {
            return Err(Error::param("tau2", format!("must be >= 0, got {tau2}")));
        }
        Ok(ScalarChannel { tau2 })
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }
}

/// Numerically stable logistic function.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Posterior nonzero probability `pi(u)` and the Wiener gain `v/(v+tau^2)`.
fn posterior_parts(u: f64, tau2: f64, prior: &SignalPrior) -> (f64, f64) {
    let rho = prior.rho();
    let v = prior.nonzero_variance();
    let gain = v / (v + tau2);
    if rho <= 0.0 {
        return (0.0, gain);
    }
    if rho >= 1.0 {
        return (1.0, gain);
    }
    // log of the prior-odds-weighted likelihood ratio  phi(u; tau2) / phi(u; v + tau2).
    let log_r = ((1.0 - rho) / rho).ln() + 0.5 * ((v + tau2) / tau2).ln()
        - 0.5 * (u * u / tau2) * gain;
    (sigmoid(-log_r), gain)
}

/// Conditional expectation `E[X | X + tau Z = u]`.
pub fn eta(u: f64, channel: &ScalarChannel, prior: &SignalPrior) -> f64 {
    let tau2 = channel.tau2();
    if tau2 == 0.0 {
        return u; // noiseless channel: the observation is the signal
    }
    let (pi, gain) = posterior_parts(u, tau2, prior);
    pi * gain * u
}

/// Derivative `d eta / d u`.
pub fn eta_prime(u: f64, channel: &ScalarChannel, prior: &SignalPrior) -> f64 {
    let tau2 = channel.tau2();
    if tau2 == 0.0 {
        return 1.0;
    }
    let (pi, gain) = posterior_parts(u, tau2, prior);
    let spread = pi * (1.0 - pi);
    if spread == 0.0 {
        return gain * pi;
    }
    // d pi / du = (gain / tau2) * u * pi (1 - pi)
    gain * (pi + (gain / tau2) * u * u * spread)
}

/// Center and width of the posterior-odds transition: `pi(u)` crosses 1/2 at
/// `|u| = u_star` over a scale of `width`. `None` when the prior is so dense
/// that `pi > 1/2` everywhere (no crossing).
pub fn posterior_transition(prior: &SignalPrior, tau2: f64) -> Option<(f64, f64)> {
    let rho = prior.rho();
    let v = prior.nonzero_variance();
    if rho <= 0.0 || rho >= 1.0 || tau2 <= 0.0 {
        return None;
    }
    let log_odds = ((1.0 - rho) / rho).ln() + 0.5 * ((v + tau2) / tau2).ln();
    // log_r(u) = log_odds - shape u^2 / 2 with shape = v / (tau2 (v + tau2)).
    let shape = v / (tau2 * (v + tau2));
    if log_odds <= 0.0 {
        return None;
    }
    let u_star = (2.0 * log_odds / shape).sqrt();
    Some((u_star, 1.0 / (shape * u_star)))
}

/// Panel boundaries (positive side) for integrating smooth functions of
/// `eta` against `N(0, s2)`: the posterior transition ring and the
/// near-origin posterior scale, in addition to the Gaussian-scale panels
/// that [`gaussian_expect`] always inserts.
pub fn eta_integration_breaks(prior: &SignalPrior, tau2: f64, s2: f64) -> Vec<f64> {
    let mut breaks = Vec::new();
    if let Some((u_star, width)) = posterior_transition(prior, tau2) {
        for k in [-6.0, -2.0, 0.0, 2.0, 6.0] {
            let b = u_star + k * width;
            if b > 0.0 {
                breaks.push(b);
            }
        }
    }
    // Posterior-odds variation scale near the origin.
    if prior.rho() > 0.0 && prior.rho() < 1.0 && tau2 > 0.0 {
        let v = prior.nonzero_variance();
        let shape = v / (tau2 * (v + tau2));
        let origin_scale = (1.0 / shape).sqrt();
        for k in [1.0, 3.0] {
            breaks.push(k * origin_scale);
        }
    }
    let _ = s2;
    breaks
}

/// `E[f(U)]` over the channel-output marginal `U = X + tau Z`
/// (mixture of `N(0, tau2)` and `N(0, v + tau2)`).
pub fn expect_over_output(
    channel: &ScalarChannel,
    prior: &SignalPrior,
    f: impl Fn(f64) -> f64 + Copy,
) -> f64 {
    let tau2 = channel.tau2();
    assert!(tau2 > 0.0, "marginal expectation needs a noisy channel");
    let rho = prior.rho();
    let v = prior.nonzero_variance();
    let mut total = 0.0;
    if rho < 1.0 {
        let breaks = eta_integration_breaks(prior, tau2, tau2);
        total += (1.0 - rho) * gaussian_expect(tau2, &breaks, f);
    }
    if rho > 0.0 {
        let s2 = v + tau2;
        let breaks = eta_integration_breaks(prior, tau2, s2);
        total += rho * gaussian_expect(s2, &breaks, f);
    }
    total
}

/// `E[(eta(X + tau Z) - X)^2]` over the prior and standard normal `Z`.
///
/// The mixture expectation is split exactly: the atom at zero contributes
/// `E_Z[eta(tau Z)^2]`, and for the Gaussian component `X0 ~ N(0, v)` the
/// pair `(X0, X0 + tau Z)` is jointly Gaussian, so conditioning on
/// `U ~ N(0, v + tau^2)` leaves `E_U[(eta(U) - gain U)^2] + gain tau^2`.
/// Both terms are Gaussian expectations integrated over panels aligned with
/// the posterior transition, which a fixed whole-line rule cannot resolve
/// once the channel noise is small.
pub fn scalar_mse(channel: &ScalarChannel, prior: &SignalPrior) -> f64 {
    let tau2 = channel.tau2();
    if tau2 == 0.0 {
        return 0.0;
    }
    let rho = prior.rho();
    let v = prior.nonzero_variance();
    let gain = v / (v + tau2);

    let zero_term = if rho < 1.0 {
        let breaks = eta_integration_breaks(prior, tau2, tau2);
        gaussian_expect(tau2, &breaks, |u| {
            let e = eta(u, channel, prior);
            e * e
        })
    } else {
        0.0
    };
    let gauss_term = if rho > 0.0 {
        let s2 = v + tau2;
        let breaks = eta_integration_breaks(prior, tau2, s2);
        let bias = gaussian_expect(s2, &breaks, |u| {
            let d = eta(u, channel, prior) - gain * u;
            d * d
        });
        bias + gain * tau2
    } else {
        0.0
    };
    (1.0 - rho) * zero_term + rho * gauss_term
}

/// Slope of the MSE map, `d MSE / d sigma^2` at the channel variance
/// `sigma2`, by central finite difference with relative step `1e-4`.
pub fn scalar_mse_derivative(sigma2: f64, prior: &SignalPrior) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::param("sigma2", format!("must be > 0, got {sigma2}")));
    }
    let h = 1e-4 * sigma2;
    let hi = scalar_mse(&ScalarChannel::new(sigma2 + h)?, prior);
    let lo = scalar_mse(&ScalarChannel::new(sigma2 - h)?, prior);
    Ok((hi - lo) / (2.0 * h))
}
