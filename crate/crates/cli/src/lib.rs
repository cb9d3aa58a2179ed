//! Command-line front end for `rmgd-core`: config parsing, run directories
//! and dispatch. No numerics live here.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, Result};
