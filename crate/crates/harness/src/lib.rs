//! Workloads, oracle checks and reports around `mpcstream-core`.

pub mod generate;
pub mod report;
pub mod runner;
pub mod workload;

pub use generate::{generate, GenParams, Kind};
pub use report::RunReport;
pub use runner::{oracle_check, run, RunConfig, RunError};
pub use workload::{Mode, Workload};
