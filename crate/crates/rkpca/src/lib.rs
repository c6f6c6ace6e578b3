//! Command-line companion to [`rkpca_core`]: CSV matrix IO, configuration
//! files, the synthetic benchmark runner and the `rkpca` subcommands.

pub mod bench;
pub mod cli;
pub mod config;
mod error;
pub mod gradcheck;
pub mod io;

pub use error::{CliError, CliResult};
