//! Experiment harness: configuration, seeded runners, CSV output and the CLI.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod records;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Outcome};
pub use records::{read_csv, write_csv, Metric, TrialRecord};
