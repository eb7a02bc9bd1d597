//! Experiment harness for the `dynpictures` command.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiments::{emit_plot_data, run_experiment, RunReport};
