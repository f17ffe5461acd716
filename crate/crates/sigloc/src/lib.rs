//! Command line tool for spectral localizer signatures: TOML run
//! configuration, matrix files, and CSV/JSON reports on top of
//! [`sigloc_core`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod matrix_io;
pub mod problem;
pub mod report;
pub mod selftest;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};
