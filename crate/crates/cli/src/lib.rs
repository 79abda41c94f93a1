//! Library half of the `ac-dynbc` command: configuration files, output
//! bookkeeping, SVG plots and subcommand dispatch.

pub mod config;
pub mod output;
pub mod run;
pub mod svg;
