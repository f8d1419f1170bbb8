//! Experiment runner: configuration, presets from the numerical section,
//! synthetic data, CSV output and the oracle suite.

pub mod config;
pub mod presets;
pub mod runner;
pub mod verify;

pub use config::{ConfigLayer, ExperimentConfig, Subdomain, Tolerance};
pub use presets::{Preset, SourceTerm};
pub use runner::{
    run_experiment, run_table, synthesize_observation, write_table_csv, ExperimentOutcome,
    Summary, TableLine,
};
