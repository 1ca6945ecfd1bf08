//! Command implementations behind the `fluctlab` binary.
//!
//! `run` analyses one scenario file, `sweep` varies one parameter of a
//! scenario, `batch` evaluates seeded random scenarios in parallel. Every
//! command writes its files into an output directory and returns a
//! [`Outcome`] whose status maps onto the process exit code.

pub mod campaign;
pub mod commands;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

pub use commands::{batch, run, sweep, Options, Outcome, Status, SweepParam};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: parse error: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("unknown sweep parameter `{0}` (expected `beta` or `channel.p`)")]
    UnknownParam(String),
    #[error("sweep needs at least one finite value")]
    EmptySweep,
    #[error("batch scenario with seed {seed}: {source}")]
    Case { seed: u64, source: fluctlab::Error },
    #[error(transparent)]
    Model(#[from] fluctlab::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}
