//! Configuration, sweeps, reporting and the command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod presets;
pub mod report;
pub mod sweep;
pub mod validate;

pub use error::ToolError;
