//! Experiment orchestration: dataset collection, seeded runs, baselines,
//! metrics with bootstrap confidence intervals, plots, and the CLI.

mod collect;
pub mod cli;
mod experiment;
mod metrics;
mod plots;
mod svg;

pub use collect::{collect_demonstrations, collect_offline_dataset};
pub use experiment::{
    run_experiment, sample_efficiency_sweep, ExperimentConfig, ExperimentError, SweepReport, SweepRow,
};
pub use metrics::{bootstrap_ci, MetricsReport, SeedSummary};
pub use plots::{emit_plots, load_metrics, read_metrics_csv, write_metrics_csv};
pub use experiment::{entropy_sweep, run_experiment_on};
