//! Command-line verification suite: configuration, subcommands and reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;
