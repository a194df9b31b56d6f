//! Std side of tamef: JSON/CSV output, a rayon executor, run
//! configuration, the constraint registry and the batch commands behind the
//! `tamef` binary.

pub mod commands;
pub mod config;
pub mod exec;
pub mod format;
pub mod registry;

pub use commands::{run, CliError, Outcome};
pub use config::RunConfig;
