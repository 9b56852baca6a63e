//! Library surface of the `dgm` command-line tool, exposed so integration
//! tests and downstream automation can drive the same code paths.

pub mod config;
pub mod experiment;
pub mod run;

pub use config::{ConfigError, PipelineConfig};
pub use experiment::{run_experiment, ExperimentPreset};
pub use run::{run_eval, run_synth};
