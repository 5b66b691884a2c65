//! Config-driven runner for the nonlinear spin dynamics in `nlse-core`.
//!
//! A run reads a TOML scenario, integrates one or more ensemble members and
//! writes, under the output directory:
//!
//! - `member_NNN/trajectory.csv`: sampled observables, one row per sample;
//! - `member_NNN/summary.json`: scenario-specific scalars;
//! - `member_NNN/FAILED`: present only if that member diverged;
//! - `aggregate.csv`: mean and standard error of each member metric;
//! - `members.csv`: every member's seed, status and metrics;
//! - `manifest.json`: written last, with the resolved config and a SHA-256
//!   of every other file.

pub mod catalog;
pub mod config;
pub mod ensemble;
mod error;
pub mod output;
pub mod scenario;

pub use config::{parse_config, ScenarioConfig};
pub use ensemble::{run_config, RunOptions, RunReport};
pub use error::CliError;
