//! Experiment orchestration: configuration, Monte-Carlo runs, CSV output and
//! the command-line interface.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod validate;

pub use config::ExperimentConfig;
pub use experiment::{
    run_experiment, run_experiment_detailed, run_tau_sweep, run_trial, ExperimentOutput, ResultRecord,
    TrialRecord,
};
pub use output::{read_records, write_records, write_trials, RESULT_COLUMNS};
