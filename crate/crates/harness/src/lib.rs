//! Monte Carlo experiments around `amp_lasso`: specs, runners, statistics
//! and the on-disk layout (CSV tables plus a JSON manifest).

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod output;
pub mod spec;
pub mod stats;

pub use error::{HarnessError, Result};
pub use experiments::{run, ExperimentOutput, SeedOutcome, Table};
pub use spec::{ExperimentKind, ExperimentSpec};
