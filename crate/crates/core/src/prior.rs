//! Discrete (point-mass) signal priors and their Gaussian-channel functionals.
//!
//! For a prior `p0` and the scalar channel `Y = X0 + τZ`, the two quantities
//! the rest of the crate needs are the soft-thresholding risk
//! `E{[η(Y;θ) − X0]²}` and the keep probability `P{|Y| ≥ θ}`. Both are
//! finite sums over the atoms of closed forms in φ and Φ.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::rng::{stream_rng, Stream};

/// A finite mixture of point masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub struct DiscretePrior {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPrior {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawPrior> for DiscretePrior {
    type Error = Error;
    fn try_from(raw: RawPrior) -> Result<Self> {
        DiscretePrior::new(raw.atoms, raw.weights)
    }
}

impl From<DiscretePrior> for RawPrior {
    fn from(p: DiscretePrior) -> Self {
        RawPrior {
            atoms: p.atoms,
            weights: p.weights,
        }
    }
}

impl DiscretePrior {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidPrior(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPrior("non-finite entry".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidPrior("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!("weights sum to {total}")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(Error::InvalidPrior(format!("repeated atom {a}")));
            }
        }
        Ok(DiscretePrior { atoms, weights })
    }

    /// Point mass at `c`.
    pub fn point_mass(c: f64) -> Self {
        DiscretePrior {
            atoms: vec![c],
            weights: vec![1.0],
        }
    }

    /// `(ε/2)δ₊₁ + (1−ε)δ₀ + (ε/2)δ₋₁`.
    pub fn three_point(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidPrior(format!("epsilon {epsilon} outside [0,1]")));
        }
        Self::new(
            vec![-1.0, 0.0, 1.0],
            vec![epsilon / 2.0, 1.0 - epsilon, epsilon / 2.0],
        )
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().copied().zip(self.weights.iter().copied())
    }

    /// Sparsity level `1 − p0({0})`.
    pub fn epsilon(&self) -> f64 {
        let zero: f64 = self.iter().filter(|&(a, _)| a == 0.0).map(|(_, w)| w).sum();
        1.0 - zero
    }

    /// Σ wᵢ aᵢ².
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(a, w)| w * a * a).sum()
    }

    /// Var(X0²), the spread of the empirical second moment per sample.
    pub fn square_variance(&self) -> f64 {
        let m2 = self.second_moment();
        self.iter().map(|(a, w)| w * (a * a - m2).powi(2)).sum()
    }

    /// Draws `n` i.i.d. values from the prior, deterministically in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, Stream::Signal);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let cumulative: Vec<f64> = self
            .weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let last = self.atoms.len() - 1;
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let k = cumulative.iter().position(|&c| u < c).unwrap_or(last);
                self.atoms[k]
            })
            .collect()
    }

    /// Exact `E{[η(X0 + τZ; θ) − X0]²}`.
    pub fn st_mse(&self, tau: f64, theta: f64) -> Result<f64> {
        check_tau_theta(tau, theta)?;
        Ok(self.iter().map(|(x0, w)| w * atom_st_mse(x0, tau, theta)).sum())
    }

    /// Exact `P{|X0 + τZ| ≥ θ}`.
    pub fn st_keep_prob(&self, tau: f64, theta: f64) -> Result<f64> {
        check_tau_theta(tau, theta)?;
        Ok(self
            .iter()
            .map(|(x0, w)| w * (gauss::sf((theta - x0) / tau) + gauss::cdf((-theta - x0) / tau)))
            .sum())
    }

    /// The prior of `X0 / s`.
    pub fn scaled(&self, s: f64) -> Self {
        DiscretePrior {
            atoms: self.atoms.iter().map(|a| a / s).collect(),
            weights: self.weights.clone(),
        }
    }
}

fn check_tau_theta(tau: f64, theta: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be >= 0, got {theta}")));
    }
    Ok(())
}

/// Soft-thresholding risk for a single atom.
///
/// With `hi = (θ − x0)/τ` and `lo = (−θ − x0)/τ`, the error is `τZ − θ` above
/// `hi`, `τZ + θ` below `lo` and `−x0` in between.
fn atom_st_mse(x0: f64, tau: f64, theta: f64) -> f64 {
    let hi = (theta - x0) / tau;
    let lo = (-theta - x0) / tau;
    let (phi_hi, phi_lo) = (gauss::pdf(hi), gauss::pdf(lo));
    let (q_hi, p_lo) = (gauss::sf(hi), gauss::cdf(lo));
    let tau2 = tau * tau;
    // E[(τZ − θ)²; Z > hi]
    let upper = tau2 * (q_hi + hi * phi_hi) - 2.0 * theta * tau * phi_hi + theta * theta * q_hi;
    // E[(τZ + θ)²; Z < lo]
    let lower = tau2 * (p_lo - lo * phi_lo) - 2.0 * theta * tau * phi_lo + theta * theta * p_lo;
    let middle = x0 * x0 * gauss::interval(lo, hi);
    upper + lower + middle
}

impl fmt::Display for DiscretePrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "atoms=[{}] weights=[{}]", list(&self.atoms), list(&self.weights))
    }
}

/// Parses `atoms=[-1,0,1] weights=[0.064,0.872,0.064]`, the JSON object
/// `{"atoms": [...], "weights": [...]}`, or the shorthands `three-point:ε`
/// and `point:c`.
impl FromStr for DiscretePrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::InvalidPrior(e.to_string()));
        }
        if let Some((name, value)) = s.split_once(':') {
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPrior(format!("bad number in {s:?}")))?;
            return match name.trim() {
                "three-point" | "three_point" => DiscretePrior::three_point(v),
                "point" => Ok(DiscretePrior::point_mass(v)),
                other => Err(Error::InvalidPrior(format!("unknown prior family {other:?}"))),
            };
        }
        let mut atoms = None;
        let mut weights = None;
        let mut rest = s;
        while !rest.is_empty() {
            let eq = rest
                .find('=')
                .ok_or_else(|| Error::InvalidPrior(format!("expected key=[...] in {s:?}")))?;
            let key = rest[..eq].trim();
            let after = rest[eq + 1..].trim_start();
            let close = after
                .find(']')
                .ok_or_else(|| Error::InvalidPrior(format!("unterminated list in {s:?}")))?;
            let list: Vec<f64> = serde_json::from_str(&after[..=close])
                .map_err(|e| Error::InvalidPrior(format!("{key}: {e}")))?;
            match key {
                "atoms" => atoms = Some(list),
                "weights" => weights = Some(list),
                other => return Err(Error::InvalidPrior(format!("unknown key {other:?}"))),
            }
            rest = after[close + 1..].trim_start();
        }
        match (atoms, weights) {
            (Some(a), Some(w)) => DiscretePrior::new(a, w),
            _ => Err(Error::InvalidPrior(format!("need both atoms and weights in {s:?}"))),
        }
    }
}
