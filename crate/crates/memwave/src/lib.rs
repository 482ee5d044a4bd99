//! Command-line front end for the memory wave solver: config files, run
//! directories with sealed manifests, verification suites and sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, Result};
