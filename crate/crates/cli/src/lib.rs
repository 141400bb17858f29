//! Batch runner for the affect experts model: configuration, the commands
//! behind the `affect` binary, and the synthetic mini-corpus.

pub mod commands;
pub mod config;
pub mod mini;

pub use commands::TaskSpec;
pub use config::RunConfig;
