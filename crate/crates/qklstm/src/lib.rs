//! File formats, configuration and the command-line harness for
//! [`qklstm_core`].
//!
//! Exit codes: 0 success, 1 I/O or runtime failure, 2 usage or invalid
//! configuration, 3 malformed input file, 4 gradient check failed.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod corpus_file;
pub mod csv;
pub mod error;
pub mod gram;

pub use checkpoint::{AnyTagger, Checkpoint};
pub use config::{ExperimentConfig, ModelChoice, OptimizerChoice, Overrides};
pub use error::{CliError, Result};
