//! Finite-difference audit of the analytic gradients.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::model::{RecurrentCell, Tagger};
use crate::params::ParamSet;

/// Gradients smaller than this are compared on an absolute scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;

/// `|a − b| / max(|a|, |b|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub name: String,
    pub entries: usize,
    pub max_relative_error: f64,
    pub max_abs_error: f64,
    pub all_finite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub epsilon: f64,
    pub loss: f64,
    pub groups: Vec<GroupReport>,
}

impl AuditReport {
    pub fn worst_relative_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_relative_error).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.groups.iter().all(|g| g.all_finite)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.all_finite() && self.worst_relative_error() < tolerance
    }
}

/// Compares every analytic gradient of the sentence loss with a central
/// difference of step `epsilon`.
pub fn grad_audit<C: RecurrentCell>(
    model: &Tagger<C>,
    tokens: &[usize],
    tags: &[usize],
    epsilon: f64,
) -> Result<AuditReport> {
    grad_audit_with(model, tokens, tags, epsilon, |_| {})
}

/// [`grad_audit`] with a hook that may alter the analytic gradients before the
/// comparison (used as a negative control).
pub fn grad_audit_with<C: RecurrentCell>(
    model: &Tagger<C>,
    tokens: &[usize],
    tags: &[usize],
    epsilon: f64,
    tamper: impl FnOnce(&mut Tagger<C>),
) -> Result<AuditReport> {
    let (loss, mut grads, _) = model.loss_and_grad(tokens, tags)?;
    tamper(&mut grads);
    let analytic = grads.flatten();
    let base = model.flatten();
    let mut probe = model.clone();
    let mut flat = base.clone();
    let mut numeric = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        flat[k] = base[k] + epsilon;
        probe.assign_flat(&flat)?;
        let up = probe.loss(tokens, tags)?;
        flat[k] = base[k] - epsilon;
        probe.assign_flat(&flat)?;
        let down = probe.loss(tokens, tags)?;
        flat[k] = base[k];
        numeric.push((up - down) / (2.0 * epsilon));
    }

    let mut groups = Vec::new();
    let mut offset = 0;
    model.visit(&mut |name, _, values| {
        let range = offset..offset + values.len();
        offset += values.len();
        let mut g = GroupReport {
            name: String::from(name),
            entries: values.len(),
            max_relative_error: 0.0,
            max_abs_error: 0.0,
            all_finite: true,
        };
        for k in range {
            let (a, n) = (analytic[k], numeric[k]);
            if !a.is_finite() || !n.is_finite() {
                g.all_finite = false;
                continue;
            }
            g.max_relative_error = g.max_relative_error.max(relative_error(a, n));
            g.max_abs_error = g.max_abs_error.max((a - n).abs());
        }
        groups.push(g);
    });
    Ok(AuditReport { epsilon, loss, groups })
}
