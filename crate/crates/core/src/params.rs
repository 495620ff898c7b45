//! Named parameter tensors.
//!
//! Every trainable object exposes its tensors in a fixed order with a stable
//! name and shape. Gradients use the same type as the parameters they
//! differentiate, so optimizers, checkpoints and the gradient audit can all
//! walk parameters and gradients side by side.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{ensure_len, Result};

pub trait ParamSet: Sized {
    /// Calls `f(name, shape, values)` for every tensor, in a fixed order.
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64]));

    /// Same order as [`ParamSet::visit`].
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64]));

    /// A value of identical structure with every entry zero.
    fn zeros_like(&self) -> Self;

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, v| n += v.len());
        n
    }

    /// `(name, shape)` for every tensor.
    fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.visit(&mut |name, shape, _| out.push((String::from(name), shape.to_vec())));
        out
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |_, _, v| out.extend_from_slice(v));
        out
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        ensure_len!("flat parameter vector", flat.len(), self.param_count());
        let mut offset = 0;
        self.visit_mut(&mut |_, v| {
            v.copy_from_slice(&flat[offset..offset + v.len()]);
            offset += v.len();
        });
        Ok(())
    }
}

/// Visits a nested parameter set with `prefix.` prepended to every name.
pub(crate) fn visit_prefixed<P: ParamSet>(
    inner: &P,
    prefix: &str,
    f: &mut dyn FnMut(&str, &[usize], &[f64]),
) {
    let mut name = String::new();
    inner.visit(&mut |n, shape, v| {
        name.clear();
        name.push_str(prefix);
        name.push('.');
        name.push_str(n);
        f(&name, shape, v);
    });
}

pub(crate) fn visit_mut_prefixed<P: ParamSet>(
    inner: &mut P,
    prefix: &str,
    f: &mut dyn FnMut(&str, &mut [f64]),
) {
    let mut name = String::new();
    inner.visit_mut(&mut |n, v| {
        name.clear();
        name.push_str(prefix);
        name.push('.');
        name.push_str(n);
        f(&name, v);
    });
}
