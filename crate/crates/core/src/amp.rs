//! Approximate message passing for the LASSO, iterative soft thresholding,
//! and the stationarity certificate that ties their fixed points to the
//! LASSO optimum.
//!
//! AMP iterates, from `x⁰ = 0` and `r⁻¹ = 0`,
//!
//! ```text
//! x^{t+1} = η(x^t + Aᵀr^t; θ_t)
//! r^t     = y − A x^t + b_t r^{t−1},   b_t = ‖x^t‖₀ / m
//! ```
//!
//! IST is the same iteration without the `b_t r^{t−1}` memory term, run on a
//! copy of `A` rescaled to a prescribed operator norm.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::PHI_INV_3_4;
use crate::instance::Instance;
use crate::matrix::norm2;
use crate::scalar_risk::{eta, eta_prime};

/// How τ̂ is estimated from the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    /// `sqrt(‖r‖²/m)`
    Rms,
    /// `median(|rᵢ|)/Φ⁻¹(3/4)`, lower middle order statistic for even m
    Median,
}

impl FromStr for TauMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rms" => Ok(TauMode::Rms),
            "median" => Ok(TauMode::Median),
            other => Err(Error::InvalidArgument(format!("unknown tau mode {other:?}"))),
        }
    }
}

/// Threshold schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `θ_t = α·τ̂_t` with the RMS estimate.
    Rms,
    /// `θ_t = α·τ̂_t` with the median estimate.
    Median,
    /// Prescribed thresholds; the last one is repeated once the list runs out.
    FixedSequence(Vec<f64>),
    /// `θ_t = λ/(1 − b_t)`, which makes every fixed point a LASSO solution at
    /// exactly this `λ`. For IST (no memory term) this is `θ_t = λ`.
    TargetLambda(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub alpha: f64,
    pub estimator: Estimator,
}

impl ThresholdPolicy {
    pub fn new(alpha: f64, estimator: Estimator) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
        }
        match &estimator {
            Estimator::FixedSequence(seq) => {
                if seq.is_empty() {
                    return Err(Error::InvalidArgument("empty threshold sequence".into()));
                }
                if seq.iter().any(|t| !(*t >= 0.0)) {
                    return Err(Error::InvalidArgument("negative threshold in sequence".into()));
                }
            }
            Estimator::TargetLambda(l) if !(*l > 0.0) => {
                return Err(Error::InvalidArgument(format!("lambda must be > 0, got {l}")));
            }
            _ => {}
        }
        Ok(ThresholdPolicy { alpha, estimator })
    }

    pub fn rms(alpha: f64) -> Result<Self> {
        Self::new(alpha, Estimator::Rms)
    }

    pub fn median(alpha: f64) -> Result<Self> {
        Self::new(alpha, Estimator::Median)
    }

    pub fn fixed(thresholds: Vec<f64>) -> Result<Self> {
        Self::new(1.0, Estimator::FixedSequence(thresholds))
    }

    pub fn target_lambda(lambda: f64) -> Result<Self> {
        Self::new(1.0, Estimator::TargetLambda(lambda))
    }

    fn tau_mode(&self) -> TauMode {
        match self.estimator {
            Estimator::Median => TauMode::Median,
            _ => TauMode::Rms,
        }
    }
}

/// Noise level estimate from a residual vector.
pub fn estimate_tau(r: &[f64], mode: TauMode) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    match mode {
        TauMode::Rms => (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt(),
        TauMode::Median => {
            let mut abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
            let k = (abs.len() - 1) / 2;
            let (_, med, _) = abs.select_nth_unstable_by(k, f64::total_cmp);
            *med / PHI_INV_3_4
        }
    }
}

/// Which iteration a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    Amp,
    /// IST on `s·A`; `scale` is `s`.
    Ist { scale: f64 },
}

impl Engine {
    fn scale(self) -> f64 {
        match self {
            Engine::Amp => 1.0,
            Engine::Ist { scale } => scale,
        }
    }
}

/// Iteration state at time `t`.
///
/// For IST, `x` is kept in the units of the rescaled problem; use
/// [`AmpState::estimate`] for the estimate of the original signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub engine: Engine,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub r_prev: Vec<f64>,
    pub t: usize,
    pub tau_hat: f64,
    pub theta: f64,
    pub b: f64,
    // (sA)ᵀ r^t and (sA)ᵀ r^{t−1}
    atr: Vec<f64>,
    atr_prev: Vec<f64>,
}

fn count_nonzero(x: &[f64]) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

impl AmpState {
    /// The `t = 0` state: `x = 0`, `r = y`, `r_prev = 0`, `b = 0`.
    pub fn init(instance: &Instance, policy: &ThresholdPolicy) -> Result<Self> {
        Self::with_engine(instance, policy, Engine::Amp)
    }

    fn with_engine(instance: &Instance, policy: &ThresholdPolicy, engine: Engine) -> Result<Self> {
        let s = engine.scale();
        let r = instance.y.clone();
        let mut atr = instance.a.tmul_vec(&r);
        if s != 1.0 {
            atr.iter_mut().for_each(|v| *v *= s);
        }
        let mut state = AmpState {
            engine,
            x: vec![0.0; instance.n],
            r,
            r_prev: vec![0.0; instance.m],
            t: 0,
            tau_hat: 0.0,
            theta: 0.0,
            b: 0.0,
            atr,
            atr_prev: vec![0.0; instance.n],
        };
        state.update_threshold(policy)?;
        Ok(state)
    }

    fn update_threshold(&mut self, policy: &ThresholdPolicy) -> Result<()> {
        self.tau_hat = estimate_tau(&self.r, policy.tau_mode());
        self.theta = match &policy.estimator {
            Estimator::Rms | Estimator::Median => policy.alpha * self.tau_hat,
            Estimator::FixedSequence(seq) => seq[self.t.min(seq.len() - 1)],
            Estimator::TargetLambda(lambda) => match self.engine {
                Engine::Amp => {
                    if self.b >= 1.0 {
                        return Err(Error::DegenerateSupport(self.b));
                    }
                    let target = lambda / (1.0 - self.b);
                    if self.t == 0 {
                        target
                    } else {
                        // averaging damps support flips that toggle b by 1/m
                        0.5 * (self.theta + target)
                    }
                }
                Engine::Ist { scale } => lambda * scale,
            },
        };
        Ok(())
    }

    /// Estimate of the original signal (`s·x` for IST).
    pub fn estimate(&self) -> Vec<f64> {
        let s = self.engine.scale();
        self.x.iter().map(|v| s * v).collect()
    }

    /// The un-thresholded estimate `x^t + Aᵀr^t`, in original signal units.
    pub fn pseudo_data(&self) -> Vec<f64> {
        let s = self.engine.scale();
        self.x
            .iter()
            .zip(&self.atr)
            .map(|(x, g)| s * (x + g))
            .collect()
    }

    /// LASSO regularization at which the current iterate would be stationary
    /// if it were a fixed point: `θ(1 − b)`, converted to original units.
    pub fn implied_lambda(&self) -> f64 {
        match self.engine {
            Engine::Amp => self.theta * (1.0 - self.b),
            Engine::Ist { scale } => self.theta / scale,
        }
    }

    /// `Aᵀ(y − A x^t)` in original units, from cached products.
    fn lasso_gradient(&self) -> Vec<f64> {
        match self.engine {
            Engine::Amp => self
                .atr
                .iter()
                .zip(&self.atr_prev)
                .map(|(g, gp)| g - self.b * gp)
                .collect(),
            Engine::Ist { scale } => self.atr.iter().map(|g| g / scale).collect(),
        }
    }

    /// KKT gap of the current estimate at [`AmpState::implied_lambda`].
    pub fn kkt_gap(&self) -> Option<f64> {
        let lambda = self.implied_lambda();
        (lambda > 0.0).then(|| kkt_gap_from_gradient(&self.estimate(), &self.lasso_gradient(), lambda))
    }
}

fn step(mut state: AmpState, instance: &Instance, policy: &ThresholdPolicy) -> Result<AmpState> {
    let (m, n) = (instance.m, instance.n);
    if state.x.len() != n || state.r.len() != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.x.len(),
        });
    }
    let s = state.engine.scale();
    let theta = state.theta;
    for (xi, gi) in state.x.iter_mut().zip(&state.atr) {
        *xi = eta(*xi + gi, theta);
    }
    state.t += 1;

    let limit = 1e6 * instance.y.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let max_abs = state.x.iter().fold(0.0f64, |acc, v| acc.max(s * v.abs()));
    if !(max_abs <= limit) {
        return Err(Error::BlowUp {
            iteration: state.t,
            max_abs,
            limit,
        });
    }

    let b = match state.engine {
        Engine::Amp => count_nonzero(&state.x) as f64 / m as f64,
        Engine::Ist { .. } => 0.0,
    };
    std::mem::swap(&mut state.r, &mut state.r_prev);
    instance.a.mul_vec_into(&state.x, &mut state.r);
    for ((ri, yi), rp) in state.r.iter_mut().zip(&instance.y).zip(&state.r_prev) {
        *ri = yi - s * *ri + b * rp;
    }
    state.b = b;

    std::mem::swap(&mut state.atr, &mut state.atr_prev);
    instance.a.tmul_vec_into(&state.r, &mut state.atr);
    if s != 1.0 {
        state.atr.iter_mut().for_each(|v| *v *= s);
    }
    state.update_threshold(policy)?;
    Ok(state)
}

/// One AMP iteration: `x ← η(x + Aᵀr; θ)`, then the residual with its
/// memory term, the noise estimate and the next threshold.
pub fn amp_step(state: AmpState, instance: &Instance, policy: &ThresholdPolicy) -> Result<AmpState> {
    if state.engine != Engine::Amp {
        return Err(Error::InvalidArgument("amp_step called on an IST state".into()));
    }
    step(state, instance, policy)
}

/// One IST iteration (no memory term).
pub fn ist_step(state: AmpState, instance: &Instance, policy: &ThresholdPolicy) -> Result<AmpState> {
    if state.engine == Engine::Amp {
        return Err(Error::InvalidArgument("ist_step called on an AMP state".into()));
    }
    step(state, instance, policy)
}

/// The `t = 0` IST state on `A` rescaled to operator norm `rescale_opnorm`.
pub fn ist_init(instance: &Instance, policy: &ThresholdPolicy, rescale_opnorm: f64) -> Result<AmpState> {
    if !(rescale_opnorm > 0.0 && rescale_opnorm <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rescale_opnorm must lie in (0,1], got {rescale_opnorm}"
        )));
    }
    let norm = instance.a.spectral_norm(1e-6, 100_000);
    if norm == 0.0 {
        return Err(Error::InvalidArgument("zero matrix".into()));
    }
    AmpState::with_engine(instance, policy, Engine::Ist {
        scale: rescale_opnorm / norm,
    })
}

/// The Onsager coefficient in its derivative form,
/// `(1/m) Σ η′(x^{t−1} + Aᵀr^{t−1}; θ_{t−1})`.
pub fn onsager_from_derivative(pseudo_prev: &[f64], theta_prev: f64, m: usize) -> f64 {
    pseudo_prev.iter().map(|&u| eta_prime(u, theta_prev)).sum::<f64>() / m as f64
}

/// One row of the per-iteration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub tau_hat: f64,
    pub theta: f64,
    pub b: f64,
    pub mse: Option<f64>,
    pub kkt_gap: Option<f64>,
}

impl TrajectoryRow {
    fn from_state(state: &AmpState, instance: &Instance) -> Self {
        TrajectoryRow {
            t: state.t,
            tau_hat: state.tau_hat,
            theta: state.theta,
            b: state.b,
            mse: Some(instance.mse(&state.estimate())),
            kkt_gap: state.kkt_gap(),
        }
    }

    pub const CSV_HEADER: &'static str = "t,tau_hat,theta,b,mse,kkt_gap";

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{:e},{:e},{:e},{},{}",
            self.t,
            self.tau_hat,
            self.theta,
            self.b,
            opt(self.mse),
            opt(self.kkt_gap)
        )
    }
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub x_hat: Vec<f64>,
    pub r_hat: Vec<f64>,
    pub converged: bool,
    pub final_state: AmpState,
    pub trajectory: Vec<TrajectoryRow>,
}

impl RunOutput {
    pub fn iterations(&self) -> usize {
        self.final_state.t
    }

    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from(TrajectoryRow::CSV_HEADER);
        out.push('\n');
        for row in &self.trajectory {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Iterates from `state` until the relative change
/// `‖x^{t+1} − x^t‖ / max(1, ‖x^t‖)` drops below `tol` or `max_iter` steps
/// have been taken.
pub fn run_from(
    mut state: AmpState,
    instance: &Instance,
    policy: &ThresholdPolicy,
    max_iter: usize,
    tol: f64,
) -> Result<RunOutput> {
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let mut trajectory = vec![TrajectoryRow::from_state(&state, instance)];
    let mut converged = false;
    let mut prev = state.x.clone();
    for _ in 0..max_iter {
        state = step(state, instance, policy)?;
        trajectory.push(TrajectoryRow::from_state(&state, instance));
        let s = state.engine.scale();
        let diff = state
            .x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (s * (a - b)).powi(2))
            .sum::<f64>()
            .sqrt();
        let base = (s * norm2(&prev)).max(1.0);
        if diff / base < tol {
            converged = true;
            break;
        }
        prev.copy_from_slice(&state.x);
    }
    Ok(RunOutput {
        x_hat: state.estimate(),
        r_hat: state.r.clone(),
        converged,
        final_state: state,
        trajectory,
    })
}

/// Runs AMP from `x⁰ = 0`.
pub fn amp_run(instance: &Instance, policy: &ThresholdPolicy, max_iter: usize, tol: f64) -> Result<RunOutput> {
    run_from(AmpState::init(instance, policy)?, instance, policy, max_iter, tol)
}

/// Runs IST from `x⁰ = 0` on `A` rescaled to operator norm `rescale_opnorm`.
pub fn ist_run(
    instance: &Instance,
    policy: &ThresholdPolicy,
    rescale_opnorm: f64,
    max_iter: usize,
    tol: f64,
) -> Result<RunOutput> {
    run_from(ist_init(instance, policy, rescale_opnorm)?, instance, policy, max_iter, tol)
}

fn kkt_gap_from_gradient(x_hat: &[f64], g: &[f64], lambda: f64) -> f64 {
    x_hat.iter().zip(g).fold(0.0f64, |acc, (&x, &gi)| {
        let v = if x == 0.0 {
            (gi.abs() - lambda).max(0.0)
        } else {
            (gi - lambda * x.signum()).abs()
        };
        acc.max(v)
    })
}

/// Violation of the LASSO stationarity conditions for
/// `½‖y − Ax‖² + λ‖x‖₁` at `x_hat`. Zero iff `x_hat` is optimal.
pub fn lasso_kkt_gap(instance: &Instance, x_hat: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    if x_hat.len() != instance.n {
        return Err(Error::DimensionMismatch {
            expected: instance.n,
            got: x_hat.len(),
        });
    }
    let ax = instance.a.mul_vec(x_hat);
    let resid: Vec<f64> = instance.y.iter().zip(&ax).map(|(y, v)| y - v).collect();
    let g = instance.a.tmul_vec(&resid);
    Ok(kkt_gap_from_gradient(x_hat, &g, lambda))
}

/// LASSO objective `½‖y − Ax‖² + λ‖x‖₁`.
pub fn lasso_objective(instance: &Instance, x: &[f64], lambda: f64) -> f64 {
    let ax = instance.a.mul_vec(x);
    let fit: f64 = instance
        .y
        .iter()
        .zip(&ax)
        .map(|(y, v)| (y - v) * (y - v))
        .sum();
    0.5 * fit + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Regularization matched by an AMP fixed point: `θ*(1 − ‖x̂‖₀/m)`.
pub fn effective_lambda(x_hat: &[f64], theta_star: f64, m: usize) -> Result<f64> {
    if !(theta_star >= 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be >= 0, got {theta_star}")));
    }
    let b = count_nonzero(x_hat) as f64 / m as f64;
    if b >= 1.0 {
        return Err(Error::DegenerateSupport(b));
    }
    Ok(theta_star * (1.0 - b))
}

/// The same map written for the RMS threshold:
/// `α (‖r̂‖/√m)(1 − ‖x̂‖₀/m)`.
pub fn effective_lambda_rms(x_hat: &[f64], r_hat: &[f64], alpha: f64) -> Result<f64> {
    effective_lambda(x_hat, alpha * estimate_tau(r_hat, TauMode::Rms), r_hat.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_gaussian_instance, ModelParams};
    use crate::matrix::DenseMatrix;
    use crate::prior::DiscretePrior;

    fn small(seed: u64) -> (Instance, ModelParams) {
        let p = ModelParams::new(0.64, 0.2, DiscretePrior::three_point(0.128).unwrap()).unwrap();
        (gen_gaussian_instance(200, &p, seed).unwrap(), p)
    }

    #[test]
    fn tau_estimators() {
        assert_eq!(estimate_tau(&[1.0, 1.0, 1.0, 1.0], TauMode::Rms), 1.0);
        assert_eq!(estimate_tau(&[0.0; 4], TauMode::Rms), 0.0);
        assert_eq!(estimate_tau(&[0.0; 4], TauMode::Median), 0.0);
        // lower middle of |r| = (1, 2, 3, 4) is 2
        let med = estimate_tau(&[-4.0, 1.0, 3.0, -2.0], TauMode::Median);
        assert!((med - 2.0 / PHI_INV_3_4).abs() < 1e-15);
    }

    #[test]
    fn policy_validation() {
        assert!(ThresholdPolicy::rms(0.0).is_err());
        assert!(ThresholdPolicy::fixed(vec![]).is_err());
        assert!(ThresholdPolicy::fixed(vec![-1.0]).is_err());
        assert!(ThresholdPolicy::target_lambda(0.0).is_err());
    }

    #[test]
    fn first_iteration_has_no_memory_term() {
        let (inst, _) = small(1);
        let policy = ThresholdPolicy::rms(1.5).unwrap();
        let s0 = AmpState::init(&inst, &policy).unwrap();
        assert_eq!(s0.b, 0.0);
        assert_eq!(s0.r, inst.y);
        let theta0 = s0.theta;
        let s1 = amp_step(s0, &inst, &policy).unwrap();
        let aty = inst.a.tmul_vec(&inst.y);
        for (x, g) in s1.x.iter().zip(&aty) {
            assert_eq!(*x, eta(*g, theta0));
        }
        assert_eq!(s1.b, count_nonzero(&s1.x) as f64 / inst.m as f64);
    }

    #[test]
    fn zero_measurements_are_a_fixed_point() {
        let (mut inst, _) = small(2);
        inst.y.iter_mut().for_each(|v| *v = 0.0);
        let out = amp_run(&inst, &ThresholdPolicy::rms(1.0).unwrap(), 10, 1e-12).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations(), 1);
        assert!(out.x_hat.iter().all(|v| *v == 0.0));
        let ist = ist_run(&inst, &ThresholdPolicy::rms(1.0).unwrap(), 0.95, 10, 1e-12).unwrap();
        assert!(ist.x_hat.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn onsager_count_matches_derivative_sum() {
        let (inst, _) = small(3);
        let policy = ThresholdPolicy::rms(1.3).unwrap();
        let mut state = AmpState::init(&inst, &policy).unwrap();
        for _ in 0..6 {
            let pseudo: Vec<f64> = state.x.iter().zip(&state.atr).map(|(a, b)| a + b).collect();
            let theta = state.theta;
            state = amp_step(state, &inst, &policy).unwrap();
            assert_eq!(state.b, onsager_from_derivative(&pseudo, theta, inst.m));
        }
    }

    #[test]
    fn onsager_coefficient_is_bounded() {
        let (inst, _) = small(4);
        let out = amp_run(&inst, &ThresholdPolicy::rms(0.2).unwrap(), 30, 1e-12);
        if let Ok(out) = out {
            for row in &out.trajectory {
                assert!(row.b >= 0.0 && row.b <= inst.n as f64 / inst.m as f64);
            }
        }
    }

    #[test]
    fn kkt_gap_zero_for_large_lambda() {
        let (inst, _) = small(5);
        let aty = inst.a.tmul_vec(&inst.y);
        let lmax = aty.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert_eq!(lasso_kkt_gap(&inst, &vec![0.0; inst.n], lmax).unwrap(), 0.0);
        assert!(lasso_kkt_gap(&inst, &vec![0.0; inst.n], 0.5 * lmax).unwrap() > 0.0);
        assert!(lasso_kkt_gap(&inst, &vec![0.0; inst.n], 0.0).is_err());
    }

    #[test]
    fn scalar_lasso_closed_form() {
        // n = 1: minimizer is η(aᵀy; λ)/‖a‖²
        let a = DenseMatrix::from_row_major(3, 1, vec![0.6, -0.3, 0.5]).unwrap();
        let inst = Instance::from_parts(a, vec![1.2], vec![0.1, 0.0, -0.2], 0.01, 0).unwrap();
        let col = [0.6, -0.3, 0.5];
        let aty: f64 = col.iter().zip(&inst.y).map(|(a, y)| a * y).sum();
        let nrm: f64 = col.iter().map(|a| a * a).sum();
        let lambda = 0.1;
        let x = eta(aty, lambda) / nrm;
        assert!(lasso_kkt_gap(&inst, &[x], lambda).unwrap() <= 1e-12);
    }

    #[test]
    fn effective_lambda_formula() {
        assert_eq!(effective_lambda(&[0.0, 0.0], 1.7, 4).unwrap(), 1.7);
        assert_eq!(effective_lambda(&[1.0, 0.0, 2.0, 0.0], 1.0, 4).unwrap(), 0.5);
        assert!(effective_lambda(&[1.0, 1.0], 1.0, 2).is_err());
        let l = effective_lambda_rms(&[1.0, 0.0], &[1.0, -1.0, 1.0, -1.0], 2.0).unwrap();
        assert!((l - 1.5).abs() < 1e-15);
    }

    #[test]
    fn blow_up_is_reported() {
        let (inst, _) = small(6);
        // threshold 0 and an over-long step make IST unstable
        let policy = ThresholdPolicy::fixed(vec![0.0]).unwrap();
        let mut state = AmpState::with_engine(&inst, &policy, Engine::Ist { scale: 3.0 }).unwrap();
        let mut failed = false;
        for _ in 0..500 {
            match ist_step(state.clone(), &inst, &policy) {
                Ok(s) => state = s,
                Err(e) => {
                    assert!(matches!(e, Error::BlowUp { .. }));
                    failed = true;
                    break;
                }
            }
        }
        assert!(failed);
    }

    #[test]
    fn scalar_and_single_row_instances() {
        let a = DenseMatrix::from_row_major(1, 1, vec![1.0]).unwrap();
        let inst = Instance::from_parts(a, vec![2.0], vec![0.0], 0.0, 0).unwrap();
        let out = amp_run(&inst, &ThresholdPolicy::fixed(vec![0.5]).unwrap(), 100, 1e-14).unwrap();
        assert!(out.x_hat[0].is_finite());

        let a = DenseMatrix::from_row_major(1, 3, vec![1.0, -0.5, 0.2]).unwrap();
        let inst = Instance::from_parts(a, vec![1.0, 0.0, 0.0], vec![0.0], 0.0, 0).unwrap();
        let out = amp_run(&inst, &ThresholdPolicy::rms(2.0).unwrap(), 50, 1e-12).unwrap();
        assert!(out.x_hat.iter().all(|v| v.is_finite()));
    }
}
