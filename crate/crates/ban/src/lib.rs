//! File formats, checkpoints, experiment plumbing and the `ban` command
//! line on top of `ban-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use error::{AppError, Result};
