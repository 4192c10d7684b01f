//! Scalar denoising: soft thresholding, its minimax risk over ε-sparse
//! priors, and the Bayes-optimal (MMSE) benchmark for discrete priors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::prior::DiscretePrior;
use crate::quad;

/// Soft thresholding η(y; θ) without argument checks.
#[inline]
pub fn eta(y: f64, theta: f64) -> f64 {
    if y > theta {
        y - theta
    } else if y < -theta {
        y + theta
    } else {
        0.0
    }
}

/// ∂η/∂y, with the value at the kinks |y| = θ taken to be 0.
#[inline]
pub fn eta_prime(y: f64, theta: f64) -> f64 {
    if y.abs() > theta {
        1.0
    } else {
        0.0
    }
}

/// Soft thresholding η(y; θ). Rejects θ < 0.
pub fn soft_threshold(y: f64, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be >= 0, got {theta}")));
    }
    Ok(eta(y, theta))
}

/// Derivative of η in its first argument (0 at the kinks).
pub fn soft_threshold_derivative(y: f64, theta: f64) -> f64 {
    eta_prime(y, theta)
}

/// Worst-case soft-thresholding risk over ε-sparse priors at threshold ασ,
/// in units of σ²:
/// `M(ε,α) = ε(1+α²) + (1−ε)[2(1+α²)Φ(−α) − 2αφ(α)]`.
pub fn risk_m(epsilon: f64, alpha: f64) -> f64 {
    let a2 = 1.0 + alpha * alpha;
    let zero_part = 2.0 * a2 * gauss::cdf(-alpha) - 2.0 * alpha * gauss::pdf(alpha);
    epsilon * a2 + (1.0 - epsilon) * zero_part
}

/// Minimax soft-thresholding risk and the threshold multiplier achieving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxResult {
    pub m_sharp: f64,
    pub alpha_sharp: f64,
    pub epsilon: f64,
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// `M#(ε) = min_α M(ε, α)` and its argmin `α#(ε)`.
pub fn minimax_soft_threshold(epsilon: f64) -> Result<MinimaxResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    let upper = (2.0 * (1.0 / epsilon).ln()).sqrt() + 10.0;
    let (alpha_sharp, m_sharp) = golden_min(|a| risk_m(epsilon, a), 0.0, upper, 1e-9);
    Ok(MinimaxResult {
        m_sharp,
        alpha_sharp,
        epsilon,
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(())
}

/// Posterior mean `E[X0 | X0 + σZ = y]` for a discrete prior.
pub fn mmse_estimate(prior: &DiscretePrior, sigma: f64, y: f64) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(posterior_mean(prior, sigma, y))
}

fn posterior_mean(prior: &DiscretePrior, sigma: f64, y: f64) -> f64 {
    // log-weights, shifted by their maximum before exponentiating
    let logs: Vec<f64> = prior
        .atoms()
        .iter()
        .zip(prior.weights())
        .map(|(&a, &w)| {
            if w > 0.0 {
                w.ln() + gauss::log_pdf((y - a) / sigma)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (&a, &l) in prior.atoms().iter().zip(&logs) {
        let p = (l - top).exp();
        num += a * p;
        den += p;
    }
    num / den
}

/// Minimum mean square error `E{(E[X0|Y] − X0)²}` for `Y = X0 + σZ`.
///
/// Each atom contributes an integral over `y ∈ [a − 12σ, a + 12σ]`, evaluated
/// by adaptive Gauss–Kronrod quadrature.
pub fn mmse_risk(prior: &DiscretePrior, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let total = prior
        .atoms()
        .iter()
        .zip(prior.weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&a, &w)| {
            let integrand = |y: f64| {
                let err = posterior_mean(prior, sigma, y) - a;
                err * err * gauss::pdf((y - a) / sigma) / sigma
            };
            w * quad::integrate(integrand, a - 12.0 * sigma, a + 12.0 * sigma, 1e-10, 4000)
        })
        .sum();
    Ok(total)
}
