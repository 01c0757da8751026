//! Batch front end for `blowup-core`: experiment configs, single runs,
//! parameter sweeps with CSV/JSON/SVG output, and the acceptance suite.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod format;
pub mod runner;
pub mod summary;
pub mod svg;
pub mod verify;

pub use config::{ExperimentConfig, RunParams, SweepPoint};
pub use error::LabError;
pub use runner::{execute, run_experiment, run_sweep, RunOutcome, SweepReport};
pub use summary::RunSummary;
