//! The subcommands. Each writes its human-readable output to `out` and
//! returns a structured report.

use std::io::Write;
use std::path::{Path, PathBuf};

use qklstm_core::kernel::FeatureMapParams;
use qklstm_core::model::{self, Tagger};
use qklstm_core::pos::{builtin_corpus, TaggedCorpus};
use qklstm_core::train;
use qklstm_core::{audit, rng, EpochMetrics, LstmConfig, Matrix, QkConfig, RecurrentCell};

use crate::checkpoint::{AnyTagger, Checkpoint};
use crate::config::{ExperimentConfig, ModelChoice};
use crate::corpus_file::read_corpus;
use crate::csv;
use crate::error::{CliError, Result};
use crate::gram;

pub const DEFAULT_OUT_DIR: &str = "qklstm-run";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";

/// Tolerances for the built-in gradient checks.
pub const QK_AUDIT_TOLERANCE: f64 = 1e-4;
pub const CLASSICAL_AUDIT_TOLERANCE: f64 = 1e-6;
pub const AUDIT_EPSILON: f64 = 1e-5;

fn emit(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(text).map_err(|e| CliError::io("<output>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { emit($out, format_args!("{}\n", format_args!($($arg)*))) };
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<TaggedCorpus> {
    match &cfg.corpus {
        Some(p) => read_corpus(p),
        None => Ok(builtin_corpus()),
    }
}

/// Builds a freshly initialized model of the configured kind.
pub fn build_model(cfg: &ExperimentConfig, vocab_size: usize, num_tags: usize) -> Result<AnyTagger> {
    Ok(match cfg.model {
        ModelChoice::Qk => AnyTagger::Qk(model::qk_tagger(vocab_size, num_tags, cfg.qk(), cfg.seed)?),
        ModelChoice::Classical => {
            AnyTagger::Classical(model::classical_tagger(vocab_size, num_tags, cfg.lstm(), cfg.seed)?)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochMetrics>,
    pub param_count: usize,
    pub metrics_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub checkpoint: Checkpoint,
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<TrainReport> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let encoded = corpus.encode();
    let mut model = build_model(cfg, corpus.vocab().len(), corpus.tag_map().len())?;
    let param_count = model.param_count();
    say!(out, "model {} with {} trainable parameters", cfg.model.label(), param_count)?;

    let training = cfg.training();
    let mut progress = |m: &EpochMetrics| {
        if m.epoch == 1 || m.epoch.is_multiple_of(10) || m.epoch == training.epochs {
            let _ = writeln!(out, "epoch {:>4}  loss {:.6}  accuracy {:.4}", m.epoch, m.mean_loss, m.token_accuracy);
        }
    };
    let history = match &mut model {
        AnyTagger::Qk(m) => train::fit_with(m, &encoded, &training, &mut progress)?,
        AnyTagger::Classical(m) => train::fit_with(m, &encoded, &training, &mut progress)?,
    };

    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let metrics_path = dir.join(METRICS_FILE);
    std::fs::write(&metrics_path, csv::format_metrics(&history)).map_err(|e| CliError::io(&metrics_path, e))?;
    let checkpoint = Checkpoint::new(model, corpus.vocab().clone(), corpus.tag_map().clone())?;
    let checkpoint_path = dir.join(CHECKPOINT_FILE);
    checkpoint.save(&checkpoint_path)?;
    say!(out, "wrote {} and {}", metrics_path.display(), checkpoint_path.display())?;
    Ok(TrainReport { history, param_count, metrics_path, checkpoint_path, checkpoint })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Predicted tag names, one list per sentence.
    pub predictions: Vec<Vec<String>>,
    pub correct: usize,
    pub total: usize,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Tags `corpus` with the checkpointed model. Every token and tag in the
/// corpus must be known to the checkpoint.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, corpus: &TaggedCorpus, out: &mut dyn Write) -> Result<EvalReport> {
    if corpus.tag_map().len() > ckpt.tags.len() {
        return Err(CliError::Usage(format!(
            "corpus uses {} tags but the checkpoint was trained with {}",
            corpus.tag_map().len(),
            ckpt.tags.len()
        )));
    }
    let encoded = corpus.encode_with(&ckpt.vocab, &ckpt.tags).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut report = EvalReport { predictions: Vec::new(), correct: 0, total: 0 };
    for (sentence, enc) in corpus.sentences().iter().zip(&encoded) {
        let predicted = ckpt.model.predict(&enc.tokens)?;
        let mut names = Vec::with_capacity(predicted.len());
        for ((word, gold), &p) in sentence.tokens.iter().zip(&sentence.tags).zip(&predicted) {
            let name = ckpt.tags.items()[p].clone();
            let mark = if name == *gold { "" } else { "  *" };
            say!(out, "{word}\t{gold}\t{name}{mark}")?;
            names.push(name);
        }
        say!(out, "")?;
        report.correct += predicted.iter().zip(&enc.tags).filter(|(p, g)| p == g).count();
        report.total += predicted.len();
        report.predictions.push(names);
    }
    say!(out, "accuracy {} ({}/{})", report.accuracy(), report.correct, report.total)?;
    Ok(report)
}

pub fn cmd_eval(checkpoint: &Path, cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<EvalReport> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let corpus = load_corpus(cfg)?;
    evaluate_checkpoint(&ckpt, &corpus, out)
}

/// Feature map for `cmd_gram`: the shared (or forget-gate) map of a QK
/// checkpoint, or a random map drawn from the configured seed.
pub fn gram_feature_map(cfg: &ExperimentConfig, input_dim: usize, checkpoint: Option<&Path>) -> Result<FeatureMapParams> {
    match checkpoint {
        Some(path) => match Checkpoint::load(path)?.model {
            AnyTagger::Qk(m) => {
                let fm = m.cell.feature_map(qklstm_core::Gate::Forget).clone();
                if fm.input_dim() != input_dim {
                    return Err(CliError::Usage(format!(
                        "vectors have {input_dim} components, the checkpoint's feature map expects {}",
                        fm.input_dim()
                    )));
                }
                Ok(fm)
            }
            AnyTagger::Classical(_) => Err(CliError::Usage("checkpoint holds a classical model with no kernel".into())),
        },
        None => Ok(FeatureMapParams::random(cfg.qubits, input_dim, &mut rng::seeded(cfg.seed))?),
    }
}

/// Writes the Gram matrix of the vectors in `vectors` to `cfg.out`, or to
/// `out` when no output path is set.
pub fn cmd_gram(
    cfg: &ExperimentConfig,
    vectors: &Path,
    checkpoint: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Matrix> {
    let text = std::fs::read_to_string(vectors).map_err(|e| CliError::io(vectors, e))?;
    let vs = csv::parse_vectors(&text, vectors)?;
    let params = gram_feature_map(cfg, vs[0].len(), checkpoint)?;
    let g = gram::parallel_gram(&params, &vs, gram::threads_from_env()?)?;
    let body = csv::format_matrix(&g);
    match &cfg.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e))?,
        None => emit(out, format_args!("{body}"))?,
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCase {
    pub model: ModelChoice,
    pub instance: String,
    pub tolerance: f64,
    pub report: audit::AuditReport,
}

impl AuditCase {
    pub fn passed(&self) -> bool {
        self.report.passes(self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub cases: Vec<AuditCase>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(AuditCase::passed)
    }
}

const AUDIT_SEEDS: [u64; 3] = [0, 1, 2];

fn audit_case<C: RecurrentCell>(
    model: ModelChoice,
    instance: String,
    tagger: &Tagger<C>,
    tokens: &[usize],
    tags: &[usize],
    tolerance: f64,
    corrupt: bool,
) -> Result<AuditCase> {
    let report = audit::grad_audit_with(tagger, tokens, tags, AUDIT_EPSILON, |g| {
        if corrupt {
            g.head.bias[0] += 0.05;
        }
    })?;
    Ok(AuditCase { model, instance, tolerance, report })
}

/// Finite-difference audits of small canned instances. `corrupt` perturbs
/// the analytic gradient, which must make the check fail.
pub fn cmd_gradcheck(models: &[ModelChoice], corrupt: bool, out: &mut dyn Write) -> Result<GradcheckReport> {
    let mut cases = Vec::new();
    for &choice in models {
        for seed in AUDIT_SEEDS {
            match choice {
                ModelChoice::Qk => {
                    for per_gate in [false, true] {
                        let cfg = QkConfig { hidden_dim: 3, input_dim: 2, n_qubits: 2, n_refs: 2, per_gate_kernels: per_gate };
                        let m = model::qk_tagger(5, 3, cfg, seed)?;
                        let mode = if per_gate { "per-gate" } else { "shared" };
                        let name = format!("{mode}-seed{seed}");
                        cases.push(audit_case(choice, name, &m, &[1, 4], &[0, 2], QK_AUDIT_TOLERANCE, corrupt)?);
                    }
                }
                ModelChoice::Classical => {
                    let m = model::classical_tagger(5, 3, LstmConfig { hidden_dim: 3, input_dim: 2 }, seed)?;
                    let name = format!("seed{seed}");
                    cases.push(audit_case(choice, name, &m, &[1, 4, 2], &[0, 2, 1], CLASSICAL_AUDIT_TOLERANCE, corrupt)?);
                }
            }
        }
    }
    for c in &cases {
        for g in &c.report.groups {
            say!(
                out,
                "model={} instance={} group={} max_rel={:.3e} tol={:e}",
                c.model.label(),
                c.instance,
                g.name,
                g.max_relative_error,
                c.tolerance
            )?;
        }
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        say!(out, "model={} instance={} worst={:.3e} result={verdict}", c.model.label(), c.instance, c.report.worst_relative_error())?;
    }
    let report = GradcheckReport { cases };
    say!(out, "result={}", if report.passed() { "PASS" } else { "FAIL" })?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCounts {
    /// `(tensor name, shape, scalars)` in parameter order.
    pub tensors: Vec<(String, Vec<usize>, usize)>,
}

impl ModelCounts {
    fn of(model: &AnyTagger) -> Self {
        let mut tensors = Vec::new();
        model.visit(&mut |name, shape, v| tensors.push((name.to_string(), shape.to_vec(), v.len())));
        ModelCounts { tensors }
    }

    /// Sum over tensors whose name starts with `component.`.
    pub fn component(&self, component: &str) -> usize {
        let prefix = format!("{component}.");
        self.tensors.iter().filter(|t| t.0.starts_with(&prefix)).map(|t| t.2).sum()
    }

    pub fn total(&self) -> usize {
        self.tensors.iter().map(|t| t.2).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsReport {
    pub qk: ModelCounts,
    pub classical: ModelCounts,
}

/// Parameter counts of both models under the same dimensions, vocabulary and
/// tag set.
pub fn cmd_params(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<ParamsReport> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let (v, t) = (corpus.vocab().len(), corpus.tag_map().len());
    let mut both = cfg.clone();
    both.model = ModelChoice::Qk;
    let qk = ModelCounts::of(&build_model(&both, v, t)?);
    both.model = ModelChoice::Classical;
    let classical = ModelCounts::of(&build_model(&both, v, t)?);

    say!(
        out,
        "vocab {v}  tags {t}  embedding_dim {}  hidden_dim {}  qubits {}  refs {}  kernels {}",
        cfg.embedding_dim,
        cfg.hidden_dim,
        cfg.qubits,
        cfg.refs,
        if cfg.per_gate_kernels { "per-gate" } else { "shared" }
    )?;
    for (label, counts) in [("qk", &qk), ("classical", &classical)] {
        say!(out, "")?;
        for (name, shape, n) in &counts.tensors {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            say!(out, "{label:<10} {name:<18} {:<8} {n:>6}", dims.join("x"))?;
        }
        for component in ["embedding", "cell", "head"] {
            say!(out, "{label:<10} {component:<27} {:>6}", counts.component(component))?;
        }
        say!(out, "{label:<10} {:<27} {:>6}", "total", counts.total())?;
    }
    Ok(ParamsReport { qk, classical })
}
