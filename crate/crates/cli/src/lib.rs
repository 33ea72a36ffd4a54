//! Front end for `nls-core`: TOML run configurations and the `nls`
//! subcommands (`run`, `table1`, `convergence`, `solve-sylvester`).
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 2 solver failure,
//! 3 blow-up guard.

pub mod commands;
pub mod config;

pub use commands::CliError;
pub use config::{parse_config, serialize_config, ConfigError, RunConfig};
