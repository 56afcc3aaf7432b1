//! Batch front end: configuration, run directories, diagnostics and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod diagnostics;
pub mod manifest;
pub mod rundir;

pub use commands::{run, Cli, UsageError};
