// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats and subcommand drivers behind the `tguhm` binary.

pub mod args;
pub mod commands;
mod error;
pub mod output;
pub mod ratio;
pub mod scenario;

pub use error::{CliError, Result};

pub const TOOL_VERSION: &str = concat!("tguhm ", env!("CARGO_PKG_VERSION"));
