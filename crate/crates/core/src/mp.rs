//! Edge-based message passing for the LASSO, in the quadratic approximation
//! and in the reduced single-number form. Memory is `Θ(mn)`; these routines
//! exist to check AMP against the algorithm it was derived from.
//!
//! All per-edge arrays are `m × n`, row-major, indexed `[a·n + i]` for the
//! edge between factor `a` and variable `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::scalar_risk::{eta, eta_prime};

/// Quadratic-approximation messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMessages {
    pub m: usize,
    pub n: usize,
    /// `x_{i→a}`
    pub x: Vec<f64>,
    /// `γ_{i→a} ≥ 0`
    pub gamma: Vec<f64>,
    /// `α_{a→i}`
    pub alpha: Vec<f64>,
    /// `β_{a→i} ∈ (0, 1]`
    pub beta: Vec<f64>,
}

impl EdgeMessages {
    /// All variable-to-factor messages zero, factor-to-variable messages at
    /// their `γ ≡ 0` values (`α = 0`, `β = 1`).
    pub fn zeros(m: usize, n: usize) -> Self {
        EdgeMessages {
            m,
            n,
            x: vec![0.0; m * n],
            gamma: vec![0.0; m * n],
            alpha: vec![0.0; m * n],
            beta: vec![1.0; m * n],
        }
    }

    fn check(&self, instance: &Instance) -> Result<()> {
        if self.m != instance.m || self.n != instance.n {
            return Err(Error::DimensionMismatch {
                expected: instance.m * instance.n,
                got: self.m * self.n,
            });
        }
        let len = self.m * self.n;
        for v in [&self.x, &self.gamma, &self.alpha, &self.beta] {
            if v.len() != len {
                return Err(Error::DimensionMismatch { expected: len, got: v.len() });
            }
        }
        if self.gamma.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidArgument("gamma messages must be >= 0".into()));
        }
        Ok(())
    }
}

/// Factor-side update: `(α, β)` from `(x, γ)` with cavity sums over `j ≠ i`.
fn factor_update(msgs: &mut EdgeMessages, instance: &Instance) -> Result<()> {
    let (m, n) = (msgs.m, msgs.n);
    for a in 0..m {
        let row = instance.a.row(a);
        let xs = &msgs.x[a * n..(a + 1) * n];
        let gs = &msgs.gamma[a * n..(a + 1) * n];
        let full_x: f64 = row.iter().zip(xs).map(|(aij, x)| aij * x).sum();
        let full_g: f64 = row.iter().zip(gs).map(|(aij, g)| aij * aij * g).sum();
        for i in 0..n {
            let denom = 1.0 + full_g - row[i] * row[i] * gs[i];
            if !(denom > 0.0) {
                return Err(Error::Divergence(format!(
                    "beta denominator {denom} on edge ({a}, {i})"
                )));
            }
            let beta = 1.0 / denom;
            msgs.beta[a * n + i] = beta;
            msgs.alpha[a * n + i] = beta * (instance.y[a] - (full_x - row[i] * xs[i]));
        }
    }
    Ok(())
}

/// Column sums `Σ_b A_{bi} α_{b→i}` and `Σ_b A²_{bi} β_{b→i}`.
fn column_sums(msgs: &EdgeMessages, instance: &Instance) -> (Vec<f64>, Vec<f64>) {
    let n = msgs.n;
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for b in 0..msgs.m {
        let row = instance.a.row(b);
        for i in 0..n {
            let aij = row[i];
            num[i] += aij * msgs.alpha[b * n + i];
            den[i] += aij * aij * msgs.beta[b * n + i];
        }
    }
    (num, den)
}

/// Soft threshold of `num/den` at `λ/den`, together with its derivative; a
/// variable that receives no information (`den = 0`) stays at zero.
fn scaled_eta(num: f64, den: f64, lambda: f64) -> (f64, f64) {
    if den > 0.0 {
        let s1 = num / den;
        let s2 = lambda / den;
        (eta(s1, s2), eta_prime(s1, s2))
    } else {
        (0.0, 0.0)
    }
}

/// One synchronous update of all `2mn` quadratic messages: first `(α, β)` at
/// time `t` from the incoming `(x, γ)`, then `(x, γ)` at time `t + 1`.
pub fn quad_mp_step(mut msgs: EdgeMessages, instance: &Instance, lambda: f64) -> Result<EdgeMessages> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    msgs.check(instance)?;
    factor_update(&mut msgs, instance)?;
    let n = msgs.n;
    let (num, den) = column_sums(&msgs, instance);
    for a in 0..msgs.m {
        let row = instance.a.row(a);
        for i in 0..n {
            let e = a * n + i;
            let c_num = num[i] - row[i] * msgs.alpha[e];
            let c_den = den[i] - row[i] * row[i] * msgs.beta[e];
            let (x, g) = scaled_eta(c_num, c_den.max(0.0), lambda);
            msgs.x[e] = x;
            msgs.gamma[e] = g;
        }
    }
    Ok(msgs)
}

/// Per-variable decision from the quadratic messages, using every incoming
/// factor message (no cavity).
pub fn mp_estimate(msgs: &EdgeMessages, instance: &Instance, lambda: f64) -> Result<Vec<f64>> {
    msgs.check(instance)?;
    let (num, den) = column_sums(msgs, instance);
    Ok(num
        .iter()
        .zip(&den)
        .map(|(&s, &d)| scaled_eta(s, d, lambda).0)
        .collect())
}

/// Reduced message passing:
///
/// ```text
/// r_{a→i}       = y_a − Σ_{j≠i} A_{aj} x_{j→a}
/// x^{new}_{i→a} = η(Σ_{b≠a} A_{bi} r_{b→i}; θ)
/// ```
///
/// Returns `(r, x_new)`, both `m × n`.
pub fn reduced_mp_step(x_msgs: &[f64], instance: &Instance, theta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (instance.m, instance.n);
    if x_msgs.len() != m * n {
        return Err(Error::DimensionMismatch { expected: m * n, got: x_msgs.len() });
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be >= 0, got {theta}")));
    }
    let mut r = vec![0.0; m * n];
    for a in 0..m {
        let row = instance.a.row(a);
        let xs = &x_msgs[a * n..(a + 1) * n];
        let full: f64 = row.iter().zip(xs).map(|(aij, x)| aij * x).sum();
        for i in 0..n {
            r[a * n + i] = instance.y[a] - (full - row[i] * xs[i]);
        }
    }
    let cols = reduced_column_sums(&r, instance);
    let mut x_new = vec![0.0; m * n];
    for a in 0..m {
        let row = instance.a.row(a);
        for i in 0..n {
            let e = a * n + i;
            x_new[e] = eta(cols[i] - row[i] * r[e], theta);
        }
    }
    Ok((r, x_new))
}

fn reduced_column_sums(r: &[f64], instance: &Instance) -> Vec<f64> {
    let n = instance.n;
    let mut cols = vec![0.0; n];
    for b in 0..instance.m {
        let row = instance.a.row(b);
        for i in 0..n {
            cols[i] += row[i] * r[b * n + i];
        }
    }
    cols
}

/// `η(Σ_b A_{bi} r_{b→i}; θ)` for every variable.
pub fn reduced_estimate(r_msgs: &[f64], instance: &Instance, theta: f64) -> Result<Vec<f64>> {
    if r_msgs.len() != instance.m * instance.n {
        return Err(Error::DimensionMismatch {
            expected: instance.m * instance.n,
            got: r_msgs.len(),
        });
    }
    Ok(reduced_column_sums(r_msgs, instance)
        .into_iter()
        .map(|s| eta(s, theta))
        .collect())
}

/// Runs reduced message passing from zero messages with thresholds
/// `thresholds[t]` and returns the per-variable estimate after the last one.
pub fn reduced_mp_run(instance: &Instance, thresholds: &[f64]) -> Result<Vec<f64>> {
    let mut x = vec![0.0; instance.m * instance.n];
    let mut last_r = Vec::new();
    for &theta in thresholds {
        let (r, x_new) = reduced_mp_step(&x, instance, theta)?;
        x = x_new;
        last_r = r;
    }
    match thresholds.last() {
        Some(&theta) => reduced_estimate(&last_r, instance, theta),
        None => Ok(vec![0.0; instance.n]),
    }
}

/// Runs quadratic message passing from zero messages for up to `max_iter`
/// steps, stopping when the estimate changes by less than `tol` in max-norm.
pub fn quad_mp_run(
    instance: &Instance,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(EdgeMessages, Vec<f64>, bool)> {
    let mut msgs = EdgeMessages::zeros(instance.m, instance.n);
    let mut est = vec![0.0; instance.n];
    for _ in 0..max_iter {
        msgs = quad_mp_step(msgs, instance, lambda)?;
        let next = mp_estimate(&msgs, instance, lambda)?;
        let change = next
            .iter()
            .zip(&est)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        est = next;
        if msgs.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite message".into()));
        }
        if change < tol {
            return Ok((msgs, est, true));
        }
    }
    Ok((msgs, est, false))
}
