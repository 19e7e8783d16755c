//! Sweeps, configuration files, CSV output and the `qee-witness` command
//! line on top of [`qee_core`].

pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;

pub use config::{parse_config, serialize_config, ConfigFile, ParsedConfig};
pub use sweep::{convergence_report, run_sweep, SweepResult, SweepRow, SweepSpec};
