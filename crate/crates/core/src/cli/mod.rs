//! Command-line front end and the file formats it reads and writes.

pub mod commands;
pub mod notation;
pub mod render;
pub mod strategy_file;
pub mod trace_doc;

pub use commands::{run_cli, ExitCode};
