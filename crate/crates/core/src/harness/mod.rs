//! Experiment orchestration: configuration, seeded repeated runs,
//! aggregation and report files.

pub mod config;
pub mod output;
pub mod run;

pub use config::{Algorithm, CheckpointSpec, ComparatorKind, DatasetSpec, ExperimentConfig};
pub use output::{emit_outputs, plot_dirs, OutputFiles};
pub use run::{run_experiment, run_experiment_on, run_single, Comparison, Experiment, RunResult, Summary};
