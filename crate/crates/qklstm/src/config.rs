//! Experiment configuration: a TOML key-value file with command-line
//! overrides layered on top.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qklstm_core::train::{ModelKind, OptimizerKind};
use qklstm_core::{LstmConfig, QkConfig, TrainingConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Qk,
    Classical,
}

impl ModelChoice {
    pub fn label(self) -> &'static str {
        match self {
            ModelChoice::Qk => "qk",
            ModelChoice::Classical => "classical",
        }
    }
}

impl From<ModelChoice> for ModelKind {
    fn from(m: ModelChoice) -> Self {
        match m {
            ModelChoice::Qk => ModelKind::Qk,
            ModelChoice::Classical => ModelKind::Classical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerChoice {
    Sgd,
    Adam,
}

impl From<OptimizerChoice> for OptimizerKind {
    fn from(o: OptimizerChoice) -> Self {
        match o {
            OptimizerChoice::Sgd => OptimizerKind::Sgd,
            OptimizerChoice::Adam => OptimizerKind::Adam,
        }
    }
}

/// Everything a command needs. Missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: OptimizerChoice,
    pub seed: u64,
    pub qubits: usize,
    pub refs: usize,
    pub per_gate_kernels: bool,
    pub hidden_dim: usize,
    pub embedding_dim: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// `word/TAG` corpus file; the built-in two-sentence corpus when absent.
    pub corpus: Option<PathBuf>,
    /// Output location. For `train` a directory, for `gram` a file.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        let q = QkConfig::default();
        ExperimentConfig {
            model: ModelChoice::Qk,
            epochs: t.epochs,
            lr: t.learning_rate,
            optimizer: OptimizerChoice::Adam,
            seed: t.seed,
            qubits: q.n_qubits,
            refs: q.n_refs,
            per_gate_kernels: q.per_gate_kernels,
            hidden_dim: q.hidden_dim,
            embedding_dim: q.input_dim,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
            corpus: None,
            out: None,
        }
    }
}

/// Values given on the command line; `None` leaves the file value alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<ModelChoice>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub optimizer: Option<OptimizerChoice>,
    pub seed: Option<u64>,
    pub qubits: Option<usize>,
    pub refs: Option<usize>,
    pub per_gate_kernels: bool,
    pub hidden_dim: Option<usize>,
    pub embedding_dim: Option<usize>,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses a config file. Relative paths inside it are taken relative to
    /// the file's own directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse { line, msg, .. } => CliError::parse(path, line, msg),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            CliError::parse("<config>", line, e.message().to_string())
        })
    }

    /// Loads `file` if given, then applies `overrides`, then validates.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = v.into(); } )* };
        }
        take!(model, epochs, lr, optimizer, seed, qubits, refs, hidden_dim, embedding_dim);
        if o.per_gate_kernels {
            self.per_gate_kernels = true;
        }
        if o.corpus.is_some() {
            self.corpus = o.corpus.clone();
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.training().validate()?;
        if self.hidden_dim == 0 || self.embedding_dim == 0 {
            return Err(CliError::Usage("hidden_dim and embedding_dim must be at least 1".into()));
        }
        self.qk().validate()?;
        if let Some(c) = &self.corpus {
            if !c.is_file() {
                return Err(CliError::Usage(format!("corpus file {} does not exist", c.display())));
            }
        }
        Ok(())
    }

    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            optimizer: self.optimizer.into(),
            seed: self.seed,
            model_kind: self.model.into(),
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
        }
    }

    pub fn qk(&self) -> QkConfig {
        QkConfig {
            hidden_dim: self.hidden_dim,
            input_dim: self.embedding_dim,
            n_qubits: self.qubits,
            n_refs: self.refs,
            per_gate_kernels: self.per_gate_kernels,
        }
    }

    pub fn lstm(&self) -> LstmConfig {
        LstmConfig { hidden_dim: self.hidden_dim, input_dim: self.embedding_dim }
    }
}
