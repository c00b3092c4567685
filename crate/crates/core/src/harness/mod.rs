//! Configuration, experiment orchestration, metrics and CSV output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, ExperimentKind, RunConfig, Solver};
pub use experiment::{run_evaluate, run_oracle_check, run_sweep, run_train, CHECKPOINT_FILE};
pub use run::{run_timeline, summarize, sweep_density, SlotResult, Summary, SweepRow};
