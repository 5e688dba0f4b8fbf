//! Subcommand implementations behind the `ellsberg` binary.

pub mod commands;
pub mod report;

pub use commands::{Output, UsageError};
