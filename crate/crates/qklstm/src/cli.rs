//! Command-line definitions and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{ExperimentConfig, ModelChoice, OptimizerChoice, Overrides};
use crate::error::{exit, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "qklstm", version, about = "Quantum-kernel LSTM part-of-speech tagger")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Experiment options shared by most subcommands. Flags override values
/// from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML experiment file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerChoice>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Number of reference vectors
    #[arg(long)]
    pub refs: Option<usize>,
    /// One feature map per gate instead of a shared one
    #[arg(long)]
    pub per_gate_kernels: bool,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// `word/TAG` corpus file (defaults to the built-in corpus)
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Output directory (train) or file (gram)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model,
            epochs: self.epochs,
            lr: self.lr,
            optimizer: self.optimizer,
            seed: self.seed,
            qubits: self.qubits,
            refs: self.refs,
            per_gate_kernels: self.per_gate_kernels,
            hidden_dim: self.hidden_dim,
            embedding_dim: self.embedding_dim,
            corpus: self.corpus.clone(),
            out: self.out.clone(),
        }
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::resolve(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a tagger; writes metrics.csv and checkpoint.txt into --out
    Train(CommonArgs),
    /// Tag a corpus with a saved checkpoint
    Eval {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Kernel Gram matrix of the vectors in a CSV file
    Gram {
        #[arg(long, value_name = "PATH")]
        vectors: PathBuf,
        /// Use the feature map of a trained QK checkpoint
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Finite-difference check of the analytic gradients
    Gradcheck {
        /// Check only this model (default: both)
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Parameter counts of both models under the same settings
    Params(CommonArgs),
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            commands::cmd_train(&common.resolve()?, out)?;
        }
        Command::Eval { checkpoint, common } => {
            commands::cmd_eval(&checkpoint, &common.resolve()?, out)?;
        }
        Command::Gram { vectors, checkpoint, common } => {
            commands::cmd_gram(&common.resolve()?, &vectors, checkpoint.as_deref(), out)?;
        }
        Command::Gradcheck { model, corrupt_gradient } => {
            let models = match model {
                Some(m) => vec![m],
                None => vec![ModelChoice::Classical, ModelChoice::Qk],
            };
            if !commands::cmd_gradcheck(&models, corrupt_gradient, out)?.passed() {
                return Err(CliError::AuditFailed);
            }
        }
        Command::Params(common) => {
            commands::cmd_params(&common.resolve()?, out)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
