//! Loss, optimizers and the per-sentence training loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_len, Error, Result};
use crate::model::{RecurrentCell, Tagger};
use crate::params::ParamSet;
use crate::pos::EncodedSentence;

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logits.iter().map(|&z| libm::exp(z - max)).sum::<f64>())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&z| libm::exp(z - lse)).collect()
}

fn check_tag(logits: &[f64], tag: usize) -> Result<()> {
    if logits.len() < 2 {
        return Err(Error::usage("need at least two tags"));
    }
    if tag >= logits.len() {
        return Err(Error::usage(format!("tag index {tag} out of range for {} tags", logits.len())));
    }
    Ok(())
}

/// Cross-entropy of `softmax(logits)` against `tag`.
pub fn nll_loss(logits: &[f64], tag: usize) -> Result<f64> {
    check_tag(logits, tag)?;
    Ok(log_sum_exp(logits) - logits[tag])
}

/// ∂ nll_loss / ∂ logits = softmax − onehot.
pub fn nll_grad(logits: &[f64], tag: usize) -> Result<Vec<f64>> {
    check_tag(logits, tag)?;
    let mut p = softmax(logits);
    p[tag] -= 1.0;
    Ok(p)
}

/// Mean of the per-step losses.
pub fn sequence_loss(logits: &[Vec<f64>], tags: &[usize]) -> Result<f64> {
    ensure_len!("tag sequence", tags.len(), logits.len());
    if tags.is_empty() {
        return Err(Error::usage("empty sequence"));
    }
    let mut total = 0.0;
    for (l, &t) in logits.iter().zip(tags) {
        total += nll_loss(l, t)?;
    }
    Ok(total / tags.len() as f64)
}

pub fn sgd_update(param: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    ensure_len!("gradient", grad.len(), param.len());
    for (p, g) in param.iter_mut().zip(grad) {
        *p -= lr * g;
    }
    Ok(())
}

/// First and second moment estimates for Adam.
///
/// `AdamState::default()` is uninitialized and is rejected by
/// [`adam_update`]; create one with [`AdamState::new`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], t: 0, beta1, beta2, eps }
    }
}

pub fn adam_update(state: &mut AdamState, param: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if state.m.is_empty() && !param.is_empty() {
        return Err(Error::usage("Adam state is not initialized"));
    }
    ensure_len!("Adam state", state.m.len(), param.len());
    ensure_len!("gradient", grad.len(), param.len());
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - libm::pow(state.beta1, t as f64);
    let c2 = 1.0 - libm::pow(state.beta2, t as f64);
    for k in 0..param.len() {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grad[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        param[k] -= lr * m_hat / (libm::sqrt(v_hat) + state.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Qk,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub model_kind: ModelKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 100,
            learning_rate: 0.1,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            model_kind: ModelKind::Qk,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        // lr = 0 is accepted as a frozen-model run.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be finite and >= 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return Err(Error::config("Adam betas must be in [0, 1) and epsilon positive"));
        }
        Ok(())
    }
}

/// Applies gradients to a whole parameter set.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, state: AdamState },
}

impl Optimizer {
    pub fn new<P: ParamSet>(config: &TrainingConfig, params: &P) -> Self {
        match config.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd { lr: config.learning_rate },
            OptimizerKind::Adam => Optimizer::Adam {
                lr: config.learning_rate,
                state: AdamState::new(params.param_count(), config.adam_beta1, config.adam_beta2, config.adam_eps),
            },
        }
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grad = grads.flatten();
        ensure_len!("gradient set", grad.len(), params.param_count());
        match self {
            Optimizer::Sgd { lr } => {
                let mut offset = 0;
                params.visit_mut(&mut |_, p| {
                    for (x, g) in p.iter_mut().zip(&grad[offset..]) {
                        *x -= *lr * g;
                    }
                    offset += p.len();
                });
                Ok(())
            }
            Optimizer::Adam { lr, state } => {
                let mut flat = params.flatten();
                adam_update(state, &mut flat, &grad, *lr)?;
                params.assign_flat(&flat)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    pub token_accuracy: f64,
}

/// Trains with one update per sentence, sentences in corpus order.
///
/// Loss and accuracy for an epoch are measured on each sentence's forward pass
/// just before its update. Epochs are numbered from 1.
pub fn fit<C: RecurrentCell>(
    model: &mut Tagger<C>,
    corpus: &[EncodedSentence],
    config: &TrainingConfig,
) -> Result<Vec<EpochMetrics>> {
    fit_with(model, corpus, config, |_| {})
}

/// [`fit`] with a callback invoked after every epoch.
pub fn fit_with<C: RecurrentCell>(
    model: &mut Tagger<C>,
    corpus: &[EncodedSentence],
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::usage("cannot train on an empty corpus"));
    }
    let mut optimizer = Optimizer::new(config, model);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut total = 0usize;
        for sentence in corpus {
            let (loss, grads, logits) = model.loss_and_grad(&sentence.tokens, &sentence.tags)?;
            loss_sum += loss;
            correct += logits.iter().zip(&sentence.tags).filter(|(l, &t)| argmax(l) == t).count();
            total += sentence.tags.len();
            optimizer.step(model, &grads)?;
        }
        let metrics = EpochMetrics {
            epoch,
            mean_loss: loss_sum / corpus.len() as f64,
            token_accuracy: correct as f64 / total as f64,
        };
        on_epoch(&metrics);
        history.push(metrics);
    }
    Ok(history)
}

/// Token accuracy of `model` on `corpus` without updating it.
pub fn evaluate<C: RecurrentCell>(model: &Tagger<C>, corpus: &[EncodedSentence]) -> Result<(f64, f64)> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut total = 0usize;
    for s in corpus {
        let fwd = model.forward(&s.tokens)?;
        loss_sum += sequence_loss(&fwd.logits, &s.tags)?;
        correct += fwd.logits.iter().zip(&s.tags).filter(|(l, &t)| argmax(l) == t).count();
        total += s.tags.len();
    }
    if total == 0 {
        return Err(Error::usage("empty corpus"));
    }
    Ok((loss_sum / corpus.len() as f64, correct as f64 / total as f64))
}
