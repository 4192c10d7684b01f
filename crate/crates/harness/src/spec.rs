//! Experiment descriptions.

use std::fmt;
use std::str::FromStr;

use amp_lasso::{DiscretePrior, Ensemble, ModelParams, TauMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MseVsLambda,
    Convergence,
    NoiseHistogram,
    SeTracking,
    ResampledOracle,
    PhaseCurve,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::MseVsLambda,
        ExperimentKind::Convergence,
        ExperimentKind::NoiseHistogram,
        ExperimentKind::SeTracking,
        ExperimentKind::ResampledOracle,
        ExperimentKind::PhaseCurve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MseVsLambda => "mse_vs_lambda",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::NoiseHistogram => "noise_histogram",
            ExperimentKind::SeTracking => "se_tracking",
            ExperimentKind::ResampledOracle => "resampled_oracle",
            ExperimentKind::PhaseCurve => "phase_curve",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| HarnessError::Spec(format!("unknown experiment kind {s:?}")))
    }
}

fn default_prior() -> DiscretePrior {
    DiscretePrior::three_point(0.128).expect("valid")
}
fn default_n() -> usize {
    1000
}
fn default_delta() -> f64 {
    0.64
}
fn default_sigma2() -> f64 {
    0.2
}
fn default_seeds() -> Vec<u64> {
    (0..20).collect()
}
fn default_alpha() -> f64 {
    2.0
}
fn default_lambdas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 1.5, 2.0]
}
fn default_max_iter() -> usize {
    500
}
fn default_tol() -> f64 {
    1e-8
}
fn default_iterations() -> usize {
    10
}
fn default_alpha_ist() -> f64 {
    1.8
}
fn default_ist_opnorm() -> f64 {
    0.95
}
fn default_ist_max_iter() -> usize {
    5000
}
fn default_pool_atom() -> f64 {
    1.0
}
fn default_bins() -> usize {
    60
}
fn default_grid() -> usize {
    50
}
fn default_target_mse() -> f64 {
    1e-4
}
fn default_tau_mode() -> TauMode {
    TauMode::Rms
}

/// Everything needed to rerun an experiment bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_prior")]
    pub prior: DiscretePrior,
    #[serde(default)]
    pub ensemble: Ensemble,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// AMP threshold multiplier (θ_t = α τ̂_t); ignored where λ fixes α.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_tau_mode")]
    pub tau_mode: TauMode,
    /// Iteration budget `T` for histogram, tracking and oracle runs.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Exact numbers of ±1 entries for the convergence and histogram runs.
    #[serde(default)]
    pub supports: Vec<usize>,
    #[serde(default = "default_alpha_ist")]
    pub alpha_ist: f64,
    #[serde(default = "default_ist_opnorm")]
    pub ist_opnorm: f64,
    /// Iteration cap for IST in convergence runs.
    #[serde(default = "default_ist_max_iter")]
    pub ist_max_iter: usize,
    /// Signal value whose coordinates are pooled by histogram runs.
    #[serde(default = "default_pool_atom")]
    pub pool_atom: f64,
    /// MSE level whose first hitting time is reported by convergence runs.
    #[serde(default = "default_target_mse")]
    pub target_mse: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Resolution of the phase-curve sweep.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl ExperimentSpec {
    /// The defaults for `kind`: δ = 0.64, σ² = 0.2, three-point prior with
    /// ε = 0.128, Gaussian matrices, seeds 0..20.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            n: default_n(),
            delta: default_delta(),
            sigma2: default_sigma2(),
            prior: default_prior(),
            ensemble: Ensemble::default(),
            seeds: default_seeds(),
            alpha: default_alpha(),
            lambdas: default_lambdas(),
            max_iter: default_max_iter(),
            tol: default_tol(),
            tau_mode: default_tau_mode(),
            iterations: default_iterations(),
            supports: Vec::new(),
            alpha_ist: default_alpha_ist(),
            ist_opnorm: default_ist_opnorm(),
            ist_max_iter: default_ist_max_iter(),
            pool_atom: default_pool_atom(),
            target_mse: default_target_mse(),
            bins: default_bins(),
            grid: default_grid(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| HarnessError::Spec(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Spec(msg));
        if self.kind != ExperimentKind::PhaseCurve {
            if self.seeds.is_empty() {
                return bad("seeds must be nonempty".into());
            }
            if self.n == 0 {
                return bad("n must be >= 1".into());
            }
            self.params()?;
        }
        if self.lambdas.iter().any(|l| !(*l > 0.0)) {
            return bad("lambda grid values must be > 0".into());
        }
        if !(self.alpha > 0.0) || !(self.alpha_ist > 0.0) {
            return bad("alpha must be > 0".into());
        }
        if !(self.ist_opnorm > 0.0 && self.ist_opnorm <= 1.0) {
            return bad(format!("ist_opnorm must lie in (0,1], got {}", self.ist_opnorm));
        }
        if let Some(&k) = self.supports.iter().find(|&&k| k > self.n) {
            return bad(format!("support {k} exceeds n = {}", self.n));
        }
        if self.max_iter == 0 || self.ist_max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        match self.kind {
            ExperimentKind::MseVsLambda if self.lambdas.is_empty() => bad("empty lambda grid".into()),
            ExperimentKind::Convergence if self.sigma2 != 0.0 => {
                bad("convergence runs are noiseless; set sigma2 = 0".into())
            }
            ExperimentKind::Convergence if self.supports.is_empty() => bad("supports must be nonempty".into()),
            ExperimentKind::NoiseHistogram | ExperimentKind::SeTracking | ExperimentKind::ResampledOracle
                if self.iterations == 0 =>
            {
                bad("iterations must be >= 1".into())
            }
            ExperimentKind::PhaseCurve if self.grid < 2 => bad("grid must be >= 2".into()),
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.delta, self.sigma2, self.prior.clone())?)
    }

    pub fn m(&self) -> usize {
        (self.delta * self.n as f64).round_ties_even() as usize
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// SHA-256 of the compact JSON encoding, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let spec = ExperimentSpec::from_json(r#"{"kind": "mse_vs_lambda", "n": 200}"#).unwrap();
        assert_eq!(spec.n, 200);
        assert_eq!(spec.seeds.len(), 20);
        let back = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.content_hash(), spec.content_hash());
        assert_eq!(spec.content_hash().len(), 64);
    }

    #[test]
    fn hash_changes_with_any_knob() {
        let a = ExperimentSpec::new(ExperimentKind::SeTracking);
        let mut b = a.clone();
        b.seeds.push(99);
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn validation() {
        assert!(ExperimentSpec::from_json(r#"{"kind": "mse_vs_lambda", "seeds": []}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"kind": "mse_vs_lambda", "lambdas": [0.5, 0.0]}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"kind": "convergence", "supports": [10]}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"kind": "nope"}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"kind": "phase_curve", "bogus": 1}"#).is_err());
        assert!(
            ExperimentSpec::from_json(r#"{"kind": "convergence", "sigma2": 0, "supports": [10]}"#).is_ok()
        );
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("SE-tracking".parse::<ExperimentKind>().unwrap(), ExperimentKind::SeTracking);
        assert!("x".parse::<ExperimentKind>().is_err());
    }
}
