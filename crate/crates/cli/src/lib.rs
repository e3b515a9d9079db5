//! Command-line companion to the solver core: strict config parsing, CSV and
//! JSON output, and the run / sweep / limit / verify / fit subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
