//! Command-line front end: scenario files, trajectory CSV and the `pbc`
//! subcommands.
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod trajectory_csv;

pub use commands::{run, Cli};
pub use error::CliError;
