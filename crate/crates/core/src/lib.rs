//! Approximate message passing (AMP) for the LASSO and the tools around it:
//! soft thresholding and its minimax risk, random instances, the AMP and IST
//! solvers, a message-passing reference implementation, and state evolution
//! with the α ↔ λ calibration and the noise-sensitivity phase boundary.
//!
//! ```
//! use amp_lasso::{amp_run, gen_gaussian_instance, DiscretePrior, ModelParams, ThresholdPolicy};
//!
//! let params = ModelParams::new(0.64, 0.2, DiscretePrior::three_point(0.128)?)?;
//! let inst = gen_gaussian_instance(500, &params, 7)?;
//! let out = amp_run(&inst, &ThresholdPolicy::rms(2.0)?, 50, 1e-8)?;
//! assert!(inst.mse(&out.x_hat) < 0.2);
//! # Ok::<(), amp_lasso::Error>(())
//! ```

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amp;
pub mod error;
pub mod gauss;
pub mod instance;
pub mod matrix;
pub mod mp;
pub mod prior;
mod quad;
pub mod rng;
pub mod scalar_risk;
pub mod state_evolution;

pub use amp::{
    amp_run, amp_step, effective_lambda, effective_lambda_rms, estimate_tau, ist_init, ist_run, ist_step,
    lasso_kkt_gap, lasso_objective, AmpState, Engine, Estimator, RunOutput, TauMode, ThresholdPolicy,
    TrajectoryRow,
};
pub use error::{Error, Result};
pub use instance::{
    check_converging, gen_gaussian_instance, gen_instance, gen_rademacher_instance, load_bundle, save_bundle,
    ConvergenceReport, Ensemble, Instance, ModelParams,
};
pub use matrix::DenseMatrix;
pub use mp::{mp_estimate, quad_mp_step, reduced_mp_step, EdgeMessages};
pub use prior::DiscretePrior;
pub use scalar_risk::{
    minimax_soft_threshold, mmse_estimate, mmse_risk, risk_m, soft_threshold, soft_threshold_derivative,
    MinimaxResult,
};
pub use state_evolution::{
    alpha_min, alpha_of_lambda, calibrate, calibrate_lambda, lasso_risk, minimax_risk_star, parametric_boundary,
    rho_c, se_fixed_point, se_map, se_run, Calibration, LassoRisk, PhasePoint, SeTrajectory,
};

// The guide in book/ is compiled and run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scalar.md")]
    mod scalar {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/amp.md")]
    mod amp {}
    #[doc = include_str!("../../../book/src/message_passing.md")]
    mod message_passing {}
    #[doc = include_str!("../../../book/src/state_evolution.md")]
    mod state_evolution {}
    #[doc = include_str!("../../../book/src/phase.md")]
    mod phase {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
