//! Experiment descriptions and their execution for the `appr` binary.

pub mod run;
pub mod spec;
pub mod verify;

pub use run::{run_experiment, RunSummary};
pub use spec::{ExperimentSpec, Task, SCHEMA_VERSION};
