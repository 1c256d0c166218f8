//! Internals of the `cancellab` binary: config parsing, command execution
//! and the run report.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
