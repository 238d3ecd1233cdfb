//! File formats, parallel experiment drivers and the `weightlab` command
//! line on top of [`weightlab_core`].

pub mod cli;
pub mod expr;
pub mod format;
pub mod io;
pub mod parallel;

pub use weightlab_core as core;

/// Anything that ends a command with exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] weightlab_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
}
