//! Experiment runner for replicable policy estimation.
//!
//! Trials draw their environment stream and shared randomness from
//! label-split paths of one master seed, so results depend only on the
//! config file and never on scheduling.

pub mod config;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{Algorithm, ExperimentConfig, MdpSource, Params, SweepConfig};
pub use report::{wilson_interval, write_outputs, Summary};
pub use run::{run_paired, run_single, sweep, RunOptions, TrialRecord};
