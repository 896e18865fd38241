//! Experiment harness, LETOR ingestion and command line for the
//! [`cascade_bandits_core`] algorithms.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod instance_io;
pub mod letor;
pub mod output;
pub mod seeds;

pub use cascade_bandits_core as core;
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_misspecification_sweep, ALGORITHMS};
pub use output::{ResultTable, SweepTable};
