//! Command-line front end for the thin-film Galerkin solver: scenario
//! configuration, single runs, parameter sweeps, checkpoints and plots.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod profiles;
pub mod simulate;
pub mod sweep;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
pub use simulate::{run_scenario, RunOutcome};
pub use sweep::{SweepSpec, SweepVariable};

/// Environment variable naming the default root for run directories.
pub const OUTPUT_ROOT_ENV: &str = "THINFILM_OUTPUT_ROOT";
