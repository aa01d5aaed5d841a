//! Experiment runner around `passage-core`: TOML configuration, parallel
//! chunk execution, and CSV/JSON artifacts.

// Validation guards are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

pub mod config;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, Threads};
pub use runner::{run, RunArtifacts, Subcommand};

/// Runs estimator chunks on the rayon pool. Chunk results are collected
/// in index order, so the reduction matches the sequential executor
/// bit for bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl passage_core::Executor for RayonExecutor {
    fn run_chunks<A, F>(&self, n_chunks: u32, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(u32) -> A + Sync + Send,
    {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(f).collect()
    }
}

/// CLI-level errors, mapped to exit codes: configuration problems exit
/// with 2, module errors with 3, IO problems with 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Module(passage_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Module(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Module(e) => write!(f, "computation failed: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<passage_core::Error> for CliError {
    fn from(e: passage_core::Error) -> Self {
        CliError::Module(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
