//! Recurrent cell abstraction and the per-token tagger built on it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{self, Matrix};
use crate::params::{visit_mut_prefixed, visit_prefixed, ParamSet};
use crate::pos::{EmbeddingTable, TagHead};
use crate::train;

/// Hidden state `h` and cell state `c` of an LSTM-style cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(hidden_dim: usize) -> Self {
        CellState { h: vec![0.0; hidden_dim], c: vec![0.0; hidden_dim] }
    }
}

/// Concatenates `[h_prev, x]`.
pub fn concat_input(h_prev: &[f64], x: &[f64], hidden_dim: usize, input_dim: usize) -> Result<Vec<f64>> {
    ensure_len!("previous hidden state", h_prev.len(), hidden_dim);
    ensure_len!("step input", x.len(), input_dim);
    let mut v = Vec::with_capacity(hidden_dim + input_dim);
    v.extend_from_slice(h_prev);
    v.extend_from_slice(x);
    Ok(v)
}

pub trait RecurrentCell: ParamSet + Clone {
    /// Everything `backward` needs from one forward step.
    type Trace;

    fn hidden_dim(&self) -> usize;
    fn input_dim(&self) -> usize;

    fn step(&self, x: &[f64], prev: &CellState) -> Result<(CellState, Self::Trace)>;

    /// Backpropagation through time over a full forward pass.
    ///
    /// `grad_h[t]` is ∂L/∂h_t coming from outside the recurrence. Parameter
    /// gradients are accumulated into `grads`; the return value holds ∂L/∂x_t.
    fn backward(&self, traces: &[Self::Trace], grad_h: &[Vec<f64>], grads: &mut Self) -> Result<Vec<Vec<f64>>>;

    /// Runs `step` over `xs` from the zero state.
    fn forward_sequence(&self, xs: &[Vec<f64>]) -> Result<(Vec<CellState>, Vec<Self::Trace>)> {
        if xs.is_empty() {
            return Err(Error::usage("cannot run a cell over an empty sequence"));
        }
        let mut state = CellState::zeros(self.hidden_dim());
        let mut states = Vec::with_capacity(xs.len());
        let mut traces = Vec::with_capacity(xs.len());
        for x in xs {
            let (next, trace) = self.step(x, &state)?;
            states.push(next.clone());
            traces.push(trace);
            state = next;
        }
        Ok((states, traces))
    }
}

/// Embedding lookup, a recurrent cell and a linear tag head.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger<C> {
    pub embedding: EmbeddingTable,
    pub cell: C,
    pub head: TagHead,
}

pub struct TaggerForward<T> {
    pub inputs: Vec<Vec<f64>>,
    pub states: Vec<CellState>,
    pub traces: Vec<T>,
    pub logits: Vec<Vec<f64>>,
}

impl<C: RecurrentCell> Tagger<C> {
    pub fn new(embedding: EmbeddingTable, cell: C, head: TagHead) -> Result<Self> {
        if embedding.dim() != cell.input_dim() {
            return Err(Error::config(format!(
                "embedding dimension {} does not match cell input dimension {}",
                embedding.dim(),
                cell.input_dim()
            )));
        }
        if head.hidden_dim() != cell.hidden_dim() {
            return Err(Error::config(format!(
                "tag head expects hidden dimension {}, cell has {}",
                head.hidden_dim(),
                cell.hidden_dim()
            )));
        }
        Ok(Tagger { embedding, cell, head })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.vocab_size()
    }

    pub fn num_tags(&self) -> usize {
        self.head.num_tags()
    }

    pub fn forward(&self, tokens: &[usize]) -> Result<TaggerForward<C::Trace>> {
        let inputs = tokens
            .iter()
            .map(|&t| self.embedding.embed(t).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        let (states, traces) = self.cell.forward_sequence(&inputs)?;
        let logits = states
            .iter()
            .map(|s| self.head.logits(&s.h))
            .collect::<Result<Vec<_>>>()?;
        Ok(TaggerForward { inputs, states, traces, logits })
    }

    pub fn predict(&self, tokens: &[usize]) -> Result<Vec<usize>> {
        Ok(self.forward(tokens)?.logits.iter().map(|l| train::argmax(l)).collect())
    }

    /// Mean per-token negative log-likelihood of `tags`.
    pub fn loss(&self, tokens: &[usize], tags: &[usize]) -> Result<f64> {
        ensure_len!("tag sequence", tags.len(), tokens.len());
        let fwd = self.forward(tokens)?;
        train::sequence_loss(&fwd.logits, tags)
    }

    /// Loss, its gradient with respect to every parameter, and the forward
    /// logits (useful for accuracy bookkeeping).
    pub fn loss_and_grad(&self, tokens: &[usize], tags: &[usize]) -> Result<(f64, Self, Vec<Vec<f64>>)> {
        ensure_len!("tag sequence", tags.len(), tokens.len());
        let fwd = self.forward(tokens)?;
        let loss = train::sequence_loss(&fwd.logits, tags)?;
        let scale = 1.0 / tokens.len() as f64;
        let mut grads = self.zeros_like();
        let mut grad_h = Vec::with_capacity(tokens.len());
        for ((logits, &tag), state) in fwd.logits.iter().zip(tags).zip(&fwd.states) {
            let mut dlogits = train::nll_grad(logits, tag)?;
            dlogits.iter_mut().for_each(|g| *g *= scale);
            grad_h.push(self.head.backward(&state.h, &dlogits, &mut grads.head)?);
        }
        let grad_x = self.cell.backward(&fwd.traces, &grad_h, &mut grads.cell)?;
        for (&token, gx) in tokens.iter().zip(&grad_x) {
            grads.embedding.accumulate(token, gx)?;
        }
        Ok((loss, grads, fwd.logits))
    }
}

impl<C: RecurrentCell> ParamSet for Tagger<C> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        visit_prefixed(&self.embedding, "embedding", f);
        visit_prefixed(&self.cell, "cell", f);
        visit_prefixed(&self.head, "head", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        visit_mut_prefixed(&mut self.embedding, "embedding", f);
        visit_mut_prefixed(&mut self.cell, "cell", f);
        visit_mut_prefixed(&mut self.head, "head", f);
    }

    fn zeros_like(&self) -> Self {
        Tagger {
            embedding: self.embedding.zeros_like(),
            cell: self.cell.zeros_like(),
            head: self.head.zeros_like(),
        }
    }
}

/// Per-component counts: `(component, scalars)`.
pub fn param_breakdown<P: ParamSet>(params: &P) -> Vec<(alloc::string::String, usize)> {
    let mut out = Vec::new();
    params.visit(&mut |name, _, v| out.push((alloc::string::String::from(name), v.len())));
    out
}

pub(crate) fn matrix_shape(m: &Matrix) -> [usize; 2] {
    [m.rows(), m.cols()]
}

pub(crate) fn sigmoid_prime_from_output(s: f64) -> f64 {
    s * (1.0 - s)
}

pub(crate) fn tanh_prime_from_output(t: f64) -> f64 {
    1.0 - t * t
}

pub(crate) use linalg::{sigmoid, tanh};

/// Tagger with a randomly initialized QK-LSTM cell. Draws happen in the order
/// embedding, cell, head from one generator seeded with `seed`.
pub fn qk_tagger(
    vocab_size: usize,
    num_tags: usize,
    config: crate::qk_cell::QkConfig,
    seed: u64,
) -> Result<Tagger<crate::qk_cell::QkLstmCell>> {
    let mut rng = crate::rng::seeded(seed);
    let embedding = EmbeddingTable::random(vocab_size, config.input_dim, &mut rng);
    let cell = crate::qk_cell::QkLstmCell::random(config, &mut rng)?;
    let head = TagHead::random(num_tags, config.hidden_dim, &mut rng);
    Tagger::new(embedding, cell, head)
}

/// Tagger with a randomly initialized classical LSTM cell; same draw order as
/// [`qk_tagger`].
pub fn classical_tagger(
    vocab_size: usize,
    num_tags: usize,
    config: crate::lstm::LstmConfig,
    seed: u64,
) -> Result<Tagger<crate::lstm::LstmCell>> {
    let mut rng = crate::rng::seeded(seed);
    let embedding = EmbeddingTable::random(vocab_size, config.input_dim, &mut rng);
    let cell = crate::lstm::LstmCell::random(config, &mut rng)?;
    let head = TagHead::random(num_tags, config.hidden_dim, &mut rng);
    Tagger::new(embedding, cell, head)
}
