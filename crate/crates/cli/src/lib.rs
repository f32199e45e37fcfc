//! Batch front-end: JSON configs in, CSV/JSON artefacts out.

// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use commands::{cmd_evolve, cmd_stationary, cmd_sweep, evolve_to, EvolveSummary, RunStatus, SweepRow};
pub use config::{RunConfig, Setup, SweepConfig};
pub use error::{CliError, CliResult};
pub use verify::{cmd_verify, list_checks, CheckOutcome, CHECKS};
