//! Experiment harness: configurations, sweeps over noise levels and network
//! sizes, and aggregation of the resulting tables.

pub mod config;
pub mod error;
pub mod harness;
pub mod report;

pub use config::{ExperimentConfig, Method};
pub use error::CliError;
pub use harness::{
    read_results, run_one, run_specs, run_sweep, write_results, ResultRow, RunOutput, RunSpec,
};
pub use report::{summarize, write_plot_data, write_summary, SummaryRow};
