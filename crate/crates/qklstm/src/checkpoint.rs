//! Self-describing text checkpoints.
//!
//! ```text
//! qklstm-checkpoint 1
//! model qk
//! hidden_dim 6
//! embedding_dim 8
//! qubits 4
//! refs 4
//! per_gate_kernels false
//! vocab the dog eat ice everybody read that book
//! tags DET NN V
//! tensor embedding.table 8 8
//! <64 values>
//! ...
//! ```
//!
//! `qubits`, `refs` and `per_gate_kernels` appear only for QK models. Each
//! `tensor` line gives a name and shape; the next line holds the values in
//! row-major order, written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qklstm_core::linalg::Matrix;
use qklstm_core::model::Tagger;
use qklstm_core::pos::{EmbeddingTable, TagHead, Vocabulary};
use qklstm_core::{LstmCell, LstmConfig, ParamSet, QkConfig, QkLstmCell, RecurrentCell};

use crate::config::ModelChoice;
use crate::error::{CliError, Result};

const MAGIC: &str = "qklstm-checkpoint 1";

/// A tagger of either cell type.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTagger {
    Qk(Tagger<QkLstmCell>),
    Classical(Tagger<LstmCell>),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyTagger::Qk($m) => $body,
            AnyTagger::Classical($m) => $body,
        }
    };
}

impl AnyTagger {
    pub fn kind(&self) -> ModelChoice {
        match self {
            AnyTagger::Qk(_) => ModelChoice::Qk,
            AnyTagger::Classical(_) => ModelChoice::Classical,
        }
    }

    pub fn vocab_size(&self) -> usize {
        dispatch!(self, m => m.vocab_size())
    }

    pub fn num_tags(&self) -> usize {
        dispatch!(self, m => m.num_tags())
    }

    pub fn hidden_dim(&self) -> usize {
        dispatch!(self, m => m.cell.hidden_dim())
    }

    pub fn embedding_dim(&self) -> usize {
        dispatch!(self, m => m.cell.input_dim())
    }

    pub fn predict(&self, tokens: &[usize]) -> Result<Vec<usize>> {
        Ok(dispatch!(self, m => m.predict(tokens))?)
    }

    pub fn param_count(&self) -> usize {
        dispatch!(self, m => m.param_count())
    }

    pub fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        dispatch!(self, m => m.visit(f))
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        dispatch!(self, m => m.visit_mut(f))
    }
}

/// A model together with the token and tag maps it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: AnyTagger,
    pub vocab: Vocabulary,
    pub tags: Vocabulary,
}

impl Checkpoint {
    pub fn new(model: AnyTagger, vocab: Vocabulary, tags: Vocabulary) -> Result<Self> {
        if vocab.len() != model.vocab_size() || tags.len() != model.num_tags() {
            return Err(CliError::Usage(format!(
                "model expects {} tokens and {} tags, maps have {} and {}",
                model.vocab_size(),
                model.num_tags(),
                vocab.len(),
                tags.len()
            )));
        }
        Ok(Checkpoint { model, vocab, tags })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "model {}", self.model.kind().label());
        let _ = writeln!(out, "hidden_dim {}", self.model.hidden_dim());
        let _ = writeln!(out, "embedding_dim {}", self.model.embedding_dim());
        if let AnyTagger::Qk(m) = &self.model {
            let c = m.cell.config();
            let _ = writeln!(out, "qubits {}", c.n_qubits);
            let _ = writeln!(out, "refs {}", c.n_refs);
            let _ = writeln!(out, "per_gate_kernels {}", c.per_gate_kernels);
        }
        let _ = writeln!(out, "vocab {}", self.vocab.items().join(" "));
        let _ = writeln!(out, "tags {}", self.tags.items().join(" "));
        self.model.visit(&mut |name, shape, values| {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "tensor {name} {}", dims.join(" "));
            let vals: Vec<String> = values.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "{}", vals.join(" "));
        });
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| CliError::parse(origin, line, msg);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(err(1, format!("missing {MAGIC:?} header"))),
        }

        let mut header: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        while let Some(&(n, line)) = lines.peek() {
            if line.starts_with("tensor ") {
                break;
            }
            lines.next();
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            if header.insert(key, (n, value.trim())).is_some() {
                return Err(err(n, format!("duplicate header key {key:?}")));
            }
        }
        let get = |key: &str| header.get(key).copied().ok_or_else(|| err(0, format!("missing header key {key:?}")));
        let num = |key: &str| -> Result<usize> {
            let (n, v) = get(key)?;
            v.parse().map_err(|_| err(n, format!("{key} must be a non-negative integer")))
        };

        let vocab = Vocabulary::from_items(get("vocab")?.1.split_whitespace())
            .map_err(|e| err(get("vocab").map(|x| x.0).unwrap_or(0), e.to_string()))?;
        let tags = Vocabulary::from_items(get("tags")?.1.split_whitespace())
            .map_err(|e| err(get("tags").map(|x| x.0).unwrap_or(0), e.to_string()))?;
        let hidden = num("hidden_dim")?;
        let input = num("embedding_dim")?;
        let (model_line, model_name) = get("model")?;

        let embedding = EmbeddingTable::new(Matrix::zeros(vocab.len(), input));
        let head = TagHead::new(Matrix::zeros(tags.len(), hidden), vec![0.0; tags.len()])?;
        let skeleton = match model_name {
            "qk" => {
                let (pg_line, pg) = get("per_gate_kernels")?;
                let per_gate_kernels =
                    pg.parse().map_err(|_| err(pg_line, "per_gate_kernels must be true or false".into()))?;
                let cfg = QkConfig {
                    hidden_dim: hidden,
                    input_dim: input,
                    n_qubits: num("qubits")?,
                    n_refs: num("refs")?,
                    per_gate_kernels,
                };
                AnyTagger::Qk(Tagger::new(embedding, QkLstmCell::zeros(cfg)?, head)?)
            }
            "classical" => {
                let cfg = LstmConfig { hidden_dim: hidden, input_dim: input };
                AnyTagger::Classical(Tagger::new(embedding, LstmCell::zeros(cfg)?, head)?)
            }
            other => return Err(err(model_line, format!("unknown model {other:?}"))),
        };

        let mut tensors: BTreeMap<String, (usize, Vec<usize>, Vec<f64>)> = BTreeMap::new();
        while let Some((n, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            if parts.next() != Some("tensor") {
                return Err(err(n, "expected a tensor line".into()));
            }
            let name = parts.next().ok_or_else(|| err(n, "tensor line without a name".into()))?;
            let shape = parts
                .map(str::parse)
                .collect::<std::result::Result<Vec<usize>, _>>()
                .map_err(|_| err(n, "tensor shape must be integers".into()))?;
            let (vn, vline) = lines.next().ok_or_else(|| err(n, format!("tensor {name} has no values")))?;
            let values = vline
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| err(vn, format!("tensor {name} has a malformed value")))?;
            if values.len() != shape.iter().product::<usize>() {
                return Err(err(vn, format!("tensor {name}: {} values for shape {shape:?}", values.len())));
            }
            if tensors.insert(name.to_string(), (n, shape, values)).is_some() {
                return Err(err(n, format!("duplicate tensor {name}")));
            }
        }

        let mut model = skeleton;
        let mut problem: Option<CliError> = None;
        let mut expected_shapes = BTreeMap::new();
        model.visit(&mut |name, shape, _| {
            expected_shapes.insert(name.to_string(), shape.to_vec());
        });
        model.visit_mut(&mut |name, slot| {
            if problem.is_some() {
                return;
            }
            match tensors.remove(name) {
                Some((_, shape, values)) if shape == expected_shapes[name] => slot.copy_from_slice(&values),
                Some((n_line, shape, _)) => {
                    problem = Some(err(
                        n_line,
                        format!("tensor {name} has shape {shape:?}, expected {:?}", expected_shapes[name]),
                    ))
                }
                None => problem = Some(err(0, format!("missing tensor {name}"))),
            }
        });
        if let Some(p) = problem {
            return Err(p);
        }
        if let Some((name, (n, _, _))) = tensors.into_iter().next() {
            return Err(err(n, format!("unexpected tensor {name}")));
        }
        Checkpoint::new(model, vocab, tags)
    }
}
