//! Batch experiments for semidefinite spectral clustering: configured
//! kernel sweeps, report files, solver timing and oracle verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod pool;
pub mod report;
pub mod sweep;
pub mod verify;

pub use config::RunConfig;
pub use report::{emit_report, parse_results};
pub use sweep::{run_sweep, SweepReport};
