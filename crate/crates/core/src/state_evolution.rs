//! State evolution: the scalar recursion that tracks AMP, its fixed point,
//! the α ↔ λ calibration, the LASSO risk prediction and the noise
//! sensitivity phase boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::instance::ModelParams;
use crate::scalar_risk::{minimax_soft_threshold, risk_m};

/// `F(τ², θ) = σ² + E{[η(X0 + τZ; θ) − X0]²}/δ`.
pub fn se_map(tau2: f64, theta: f64, params: &ModelParams) -> Result<f64> {
    if !(tau2 > 0.0) {
        return Err(Error::InvalidArgument(format!("tau2 must be > 0, got {tau2}")));
    }
    Ok(params.sigma2 + params.prior.st_mse(tau2.sqrt(), theta)? / params.delta)
}

/// `τ₀² = σ² + E{X0²}/δ`.
pub fn initial_tau2(params: &ModelParams) -> f64 {
    params.sigma2 + params.prior.second_moment() / params.delta
}

/// `τ² ↦ F(τ², ατ)`
fn se_map_alpha(tau2: f64, alpha: f64, params: &ModelParams) -> Result<f64> {
    se_map(tau2, alpha * tau2.sqrt(), params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeTrajectory {
    pub tau2_sequence: Vec<f64>,
    pub theta_sequence: Vec<f64>,
    pub converged: bool,
    pub tau_star: Option<f64>,
}

/// Iterates `τ²_{t+1} = F(τ²_t, ατ_t)` from `τ₀²` until the relative change
/// is at most `tol` or `max_iter` updates have been made.
pub fn se_run(params: &ModelParams, alpha: f64, max_iter: usize, tol: f64) -> Result<SeTrajectory> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let mut tau2 = initial_tau2(params);
    if !(tau2 > 0.0) {
        return Err(Error::InvalidArgument(
            "zero signal and zero noise: state evolution is identically 0".into(),
        ));
    }
    let mut tau2_sequence = vec![tau2];
    let mut theta_sequence = vec![alpha * tau2.sqrt()];
    let mut converged = false;
    for _ in 0..max_iter {
        let next = se_map_alpha(tau2, alpha, params)?;
        tau2_sequence.push(next);
        theta_sequence.push(alpha * next.sqrt());
        let change = (next - tau2).abs();
        tau2 = next;
        if change <= tol * tau2_sequence[tau2_sequence.len() - 2] {
            converged = true;
            break;
        }
        if !(tau2 > 0.0) {
            // noiseless run reached exact recovery
            break;
        }
    }
    Ok(SeTrajectory {
        tau_star: converged.then(|| tau2.sqrt()),
        tau2_sequence,
        theta_sequence,
        converged,
    })
}

/// Same recursion with a prescribed threshold sequence (the last value is
/// repeated if `steps` exceeds its length).
pub fn se_run_thresholds(params: &ModelParams, thresholds: &[f64], steps: usize) -> Result<Vec<f64>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("empty threshold sequence".into()));
    }
    let mut tau2 = vec![initial_tau2(params)];
    for t in 0..steps {
        let theta = thresholds[t.min(thresholds.len() - 1)];
        tau2.push(se_map(tau2[t], theta, params)?);
    }
    Ok(tau2)
}

/// Left side of the α_min equation, `(1+α²)Φ(−α) − αφ(α)`; equal to
/// `M(0, α)/2`.
fn alpha_min_lhs(alpha: f64) -> f64 {
    (1.0 + alpha * alpha) * gauss::cdf(-alpha) - alpha * gauss::pdf(alpha)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // assumes f(lo) and f(hi) have opposite signs
    let f_lo_positive = f(lo) > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == f_lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The nonnegative root of `(1+α²)Φ(−α) − αφ(α) = δ/2`; the threshold
/// multiplier below which the state evolution fixed point is not unique.
pub fn alpha_min(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1], got {delta}")));
    }
    if delta == 1.0 {
        return Ok(0.0);
    }
    Ok(bisect(|a| alpha_min_lhs(a) - delta / 2.0, 0.0, 20.0, 1e-12))
}

fn check_fixed_point_args(params: &ModelParams, alpha: f64) -> Result<()> {
    if !(params.sigma2 > 0.0) {
        return Err(Error::InvalidArgument("sigma2 must be > 0".into()));
    }
    let amin = if params.delta <= 1.0 {
        alpha_min(params.delta)?
    } else {
        0.0
    };
    if !(alpha > amin) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} must exceed alpha_min({}) = {amin}",
            params.delta
        )));
    }
    Ok(())
}

/// The unique solution of `τ² = F(τ², ατ)`, returned as `τ*`.
///
/// Plain iteration is tried first (the map is nondecreasing and concave, so
/// it converges monotonically); when it is too slow the root of
/// `F(τ², ατ) − τ²` is bracketed and bisected.
pub fn se_fixed_point(params: &ModelParams, alpha: f64) -> Result<f64> {
    check_fixed_point_args(params, alpha)?;
    let g = |t2: f64| se_map_alpha(t2, alpha, params).map(|f| f - t2);
    let residual_ok = |t2: f64| -> Result<bool> { Ok(g(t2)?.abs() <= 1e-12 * t2) };

    let mut tau2 = initial_tau2(params);
    let mut prev_step = f64::INFINITY;
    let mut damping = 1.0;
    for _ in 0..500 {
        let step = se_map_alpha(tau2, alpha, params)? - tau2;
        if step.abs() > prev_step.abs() && step.signum() != prev_step.signum() {
            damping = 0.5;
        }
        if step.abs() <= 4.0 * f64::EPSILON * tau2 || step.abs() >= prev_step.abs() {
            break;
        }
        tau2 += damping * step;
        prev_step = step;
    }
    if residual_ok(tau2)? {
        return Ok(tau2.sqrt());
    }

    // g(σ²) ≥ 0 since F ≥ σ²; grow the upper end until g < 0
    let lo = params.sigma2;
    let mut hi = initial_tau2(params).max(2.0 * lo);
    let mut grow = 0;
    while g(hi)? >= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::NoBracket("state evolution fixed point".into()));
        }
    }
    let mut lo = lo;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    let (gl, gh) = (g(lo)?.abs(), g(hi)?.abs());
    let tau2 = if gl <= gh { lo } else { hi };
    if !residual_ok(tau2)? {
        return Err(Error::NoBracket(format!(
            "fixed point residual {} at tau2 = {tau2}",
            g(tau2)?
        )));
    }
    Ok(tau2.sqrt())
}

fn check_calibration_params(params: &ModelParams) -> Result<()> {
    if params.prior.epsilon() <= 0.0 {
        return Err(Error::InvalidArgument(
            "calibration needs a prior with mass off zero".into(),
        ));
    }
    Ok(())
}

/// Fixed-point quantities for one value of α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub lambda: f64,
    pub tau_star: f64,
    pub theta_star: f64,
    /// `P{|X0 + τ*Z| ≥ θ*}/δ`, the limiting Onsager coefficient
    pub b_star: f64,
}

fn calibrate_unchecked(alpha: f64, params: &ModelParams) -> Result<Calibration> {
    let tau_star = se_fixed_point(params, alpha)?;
    let theta_star = alpha * tau_star;
    let b_star = params.prior.st_keep_prob(tau_star, theta_star)? / params.delta;
    Ok(Calibration {
        alpha,
        lambda: theta_star * (1.0 - b_star),
        tau_star,
        theta_star,
        b_star,
    })
}

/// `λ(α) = ατ*[1 − P{|X0 + τ*Z| ≥ ατ*}/δ]` together with the fixed point.
pub fn calibrate(alpha: f64, params: &ModelParams) -> Result<Calibration> {
    check_calibration_params(params)?;
    calibrate_unchecked(alpha, params)
}

/// `λ(α)`
pub fn calibrate_lambda(alpha: f64, params: &ModelParams) -> Result<f64> {
    calibrate(alpha, params).map(|c| c.lambda)
}

/// Inverse of the calibration map: the smallest `α > α_min(δ)` with
/// `λ(α) = λ`.
pub fn alpha_of_lambda(lambda: f64, params: &ModelParams) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    check_calibration_params(params)?;
    check_fixed_point_args(params, f64::INFINITY)?;
    let amin = if params.delta <= 1.0 { alpha_min(params.delta)? } else { 0.0 };
    let lam = |a: f64| calibrate_unchecked(a, params).map(|c| c.lambda);

    let mut h = 1e-3;
    let mut lo = amin + 1e-9;
    let mut hi = amin + h;
    // λ(α) → −∞ as α ↓ α_min when δ < 1; elsewhere shrink towards α_min
    while lam(hi)? < lambda {
        lo = hi;
        h *= 2.0;
        hi = amin + h;
        if hi > 1e3 {
            return Err(Error::NoBracket(format!("no alpha below 1e3 reaches lambda = {lambda}")));
        }
    }
    if lam(lo)? >= lambda {
        return Err(Error::NoBracket(format!(
            "lambda = {lambda} is reached arbitrarily close to alpha_min"
        )));
    }
    // a second crossing would make the inverse ambiguous
    let mut probe = hi;
    for _ in 0..4 {
        probe *= 1.5;
        if lam(probe)? < lambda {
            log::warn!("calibration map crosses lambda = {lambda} more than once near alpha = {probe}");
            break;
        }
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if lam(mid)? < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Predicted LASSO risk at regularization λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoRisk {
    pub lambda: f64,
    pub alpha: f64,
    pub tau_star: f64,
    pub theta_star: f64,
    /// `δ(τ*² − σ²)`
    pub mse: f64,
    /// `E{[η(X0 + τ*Z; θ*) − X0]²}`, equal to `mse` at the fixed point
    pub mse_scalar: f64,
}

/// Asymptotic per-coordinate MSE of the LASSO estimator.
pub fn lasso_risk(lambda: f64, params: &ModelParams) -> Result<LassoRisk> {
    let alpha = alpha_of_lambda(lambda, params)?;
    let cal = calibrate_unchecked(alpha, params)?;
    Ok(LassoRisk {
        lambda,
        alpha,
        tau_star: cal.tau_star,
        theta_star: cal.theta_star,
        mse: params.delta * (cal.tau_star * cal.tau_star - params.sigma2),
        mse_scalar: params.prior.st_mse(cal.tau_star, cal.theta_star)?,
    })
}

/// Noise-sensitivity boundary `ρc(δ)`: the sparsity at which the minimax
/// soft-thresholding risk reaches the undersampling ratio, `M#(ρδ) = δ`.
/// This is where the denominator of [`minimax_risk_star`] vanishes, and it
/// coincides with the curve traced by [`parametric_boundary`].
pub fn rho_c(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
    }
    // M#(ε) increases from 0 to 1 on (0, 1), so ρ ↦ M#(ρδ) − δ has one sign change
    let h = |rho: f64| minimax_soft_threshold(rho * delta).map(|r| r.m_sharp - delta);
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// LASSO minimax noise sensitivity `M*(δ, ρ)`; `+∞` at and above the
/// boundary.
pub fn minimax_risk_star(delta: f64, rho: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < delta < 1 and rho > 0, got ({delta}, {rho})"
        )));
    }
    if rho >= rho_c(delta)? || rho * delta >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let m = minimax_soft_threshold(rho * delta)?.m_sharp;
    let denom = 1.0 - m / delta;
    Ok(if denom > 0.0 { m / denom } else { f64::INFINITY })
}

/// Point `(δ(α), ρ(α))` of the phase boundary reached by threshold
/// multiplier α.
pub fn parametric_boundary(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
    }
    let phi = gauss::pdf(alpha);
    let tail = alpha * gauss::cdf(-alpha);
    let delta = 2.0 * phi / (alpha + 2.0 * (phi - tail));
    let rho = 1.0 - tail / phi;
    Ok((delta, rho))
}

/// The α whose boundary point has undersampling ratio `delta`; the noiseless
/// AMP threshold prescription at that δ.
pub fn boundary_alpha(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
    }
    let d = |a: f64| parametric_boundary(a).map(|p| p.0 - delta).unwrap_or(f64::NAN);
    Ok(bisect(d, 0.0, 40.0, 1e-13))
}

/// `(δ, ρ, M*)` on a grid, used for level-set plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub delta: f64,
    pub rho: f64,
    pub rho_c: f64,
    pub m_star: f64,
}

impl PhasePoint {
    pub fn new(delta: f64, rho: f64) -> Result<Self> {
        Ok(PhasePoint {
            delta,
            rho,
            rho_c: rho_c(delta)?,
            m_star: minimax_risk_star(delta, rho)?,
        })
    }
}

/// CSV `lambda,predicted_mse,tau_star,theta_star,alpha` over a λ grid.
pub fn lambda_curve_csv(params: &ModelParams, lambdas: &[f64]) -> Result<String> {
    let mut out = String::from("lambda,predicted_mse,tau_star,theta_star,alpha\n");
    for &l in lambdas {
        let r = lasso_risk(l, params)?;
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            l, r.mse, r.tau_star, r.theta_star, r.alpha
        ));
    }
    Ok(out)
}

/// CSV `alpha,delta,rho` along the parametric boundary.
pub fn boundary_csv(alphas: &[f64]) -> Result<String> {
    let mut out = String::from("alpha,delta,rho\n");
    for &a in alphas {
        let (d, r) = parametric_boundary(a)?;
        out.push_str(&format!("{a},{d:e},{r:e}\n"));
    }
    Ok(out)
}

/// CSV `delta,rho,m_star` (with `inf` above the boundary).
pub fn risk_grid_csv(deltas: &[f64], rhos: &[f64]) -> Result<String> {
    let mut out = String::from("delta,rho,m_star\n");
    for &d in deltas {
        for &r in rhos {
            let m = minimax_risk_star(d, r)?;
            out.push_str(&format!("{d},{r},{m:e}\n"));
        }
    }
    Ok(out)
}

/// `M(0, α) = δ` restated; exposed for the identity check against
/// [`alpha_min`].
pub fn zero_prior_risk(alpha: f64) -> f64 {
    risk_m(0.0, alpha)
}
