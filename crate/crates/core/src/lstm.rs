//! Classical LSTM baseline with dense vector gates.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{axpy, Matrix};
use crate::model::{
    concat_input, matrix_shape, sigmoid, sigmoid_prime_from_output, tanh, tanh_prime_from_output, CellState,
    RecurrentCell,
};
use crate::params::ParamSet;
use crate::rng;

const GATE_NAMES: [(&str, &str); 4] = [("w_f", "b_f"), ("w_i", "b_i"), ("w_c", "b_c"), ("w_o", "b_o")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmConfig {
    pub hidden_dim: usize,
    pub input_dim: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig { hidden_dim: 6, input_dim: 8 }
    }
}

/// Gate weights `W_g` (`hidden × (hidden + input)`) and biases `b_g`, in the
/// order forget, input, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    config: LstmConfig,
    pub weights: [Matrix; 4],
    pub biases: [Vec<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmStepTrace {
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub cand: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

impl LstmCell {
    pub fn zeros(config: LstmConfig) -> Result<Self> {
        if config.hidden_dim == 0 || config.input_dim == 0 {
            return Err(Error::config("hidden and input dimensions must be positive"));
        }
        let d = config.hidden_dim + config.input_dim;
        let w = Matrix::zeros(config.hidden_dim, d);
        let b = vec![0.0; config.hidden_dim];
        Ok(LstmCell {
            config,
            weights: [w.clone(), w.clone(), w.clone(), w],
            biases: [b.clone(), b.clone(), b.clone(), b],
        })
    }

    /// Weights uniform in `[−1/√hidden, 1/√hidden]`; biases zero except the
    /// forget bias, which is `+1`.
    pub fn random<R: Rng + ?Sized>(config: LstmConfig, rng: &mut R) -> Result<Self> {
        let mut cell = Self::zeros(config)?;
        let bound = 1.0 / libm::sqrt(config.hidden_dim as f64);
        for w in cell.weights.iter_mut() {
            w.as_mut_slice().iter_mut().for_each(|x| *x = rng::symmetric(rng, bound));
        }
        cell.biases[0].iter_mut().for_each(|b| *b = 1.0);
        Ok(cell)
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    fn check_structure(&self) -> Result<()> {
        let d = self.config.hidden_dim + self.config.input_dim;
        for (w, b) in self.weights.iter().zip(&self.biases) {
            w.check_shape("gate weights", self.config.hidden_dim, d)?;
            ensure_len!("gate bias", b.len(), self.config.hidden_dim);
        }
        Ok(())
    }

    fn preactivation(&self, gate: usize, v: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.weights[gate].matvec(v)?;
        axpy(&mut z, 1.0, &self.biases[gate]);
        Ok(z)
    }
}

impl RecurrentCell for LstmCell {
    type Trace = LstmStepTrace;

    fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn step(&self, x: &[f64], prev: &CellState) -> Result<(CellState, LstmStepTrace)> {
        self.check_structure()?;
        let hd = self.config.hidden_dim;
        ensure_len!("previous cell state", prev.c.len(), hd);
        let v = concat_input(&prev.h, x, hd, self.config.input_dim)?;
        let f: Vec<f64> = self.preactivation(0, &v)?.into_iter().map(sigmoid).collect();
        let i: Vec<f64> = self.preactivation(1, &v)?.into_iter().map(sigmoid).collect();
        let cand: Vec<f64> = self.preactivation(2, &v)?.into_iter().map(tanh).collect();
        let o: Vec<f64> = self.preactivation(3, &v)?.into_iter().map(sigmoid).collect();
        let c: Vec<f64> = (0..hd).map(|k| f[k] * prev.c[k] + i[k] * cand[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|&x| tanh(x)).collect();
        let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
        let trace = LstmStepTrace { v, f, i, cand, o, c_prev: prev.c.clone(), c: c.clone(), tanh_c };
        Ok((CellState { h, c }, trace))
    }

    fn backward(&self, traces: &[LstmStepTrace], grad_h: &[Vec<f64>], grads: &mut Self) -> Result<Vec<Vec<f64>>> {
        ensure_len!("upstream hidden gradients", grad_h.len(), traces.len());
        grads.check_structure()?;
        let hd = self.config.hidden_dim;
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut grad_x = vec![Vec::new(); traces.len()];

        for t in (0..traces.len()).rev() {
            let tr = &traces[t];
            ensure_len!("upstream hidden gradient", grad_h[t].len(), hd);
            let mut d_pre = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
            for k in 0..hd {
                let dh = grad_h[t][k] + dh_next[k];
                let dc = dc_next[k] + dh * tr.o[k] * tanh_prime_from_output(tr.tanh_c[k]);
                d_pre[0][k] = dc * tr.c_prev[k] * sigmoid_prime_from_output(tr.f[k]);
                d_pre[1][k] = dc * tr.cand[k] * sigmoid_prime_from_output(tr.i[k]);
                d_pre[2][k] = dc * tr.i[k] * tanh_prime_from_output(tr.cand[k]);
                d_pre[3][k] = dh * tr.tanh_c[k] * sigmoid_prime_from_output(tr.o[k]);
                dc_next[k] = dc * tr.f[k];
            }
            let mut dv = vec![0.0; tr.v.len()];
            for g in 0..4 {
                grads.weights[g].add_outer(1.0, &d_pre[g], &tr.v)?;
                axpy(&mut grads.biases[g], 1.0, &d_pre[g]);
                axpy(&mut dv, 1.0, &self.weights[g].matvec_t(&d_pre[g])?);
            }
            dh_next.copy_from_slice(&dv[..hd]);
            grad_x[t] = dv[hd..].to_vec();
        }
        Ok(grad_x)
    }
}

impl ParamSet for LstmCell {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        for (g, (wn, bn)) in GATE_NAMES.iter().enumerate() {
            f(wn, &matrix_shape(&self.weights[g]), self.weights[g].as_slice());
            f(bn, &[self.biases[g].len()], &self.biases[g]);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (g, (wn, bn)) in GATE_NAMES.iter().enumerate() {
            f(wn, self.weights[g].as_mut_slice());
            f(bn, &mut self.biases[g]);
        }
    }

    fn zeros_like(&self) -> Self {
        LstmCell::zeros(self.config).expect("config was validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_parameters_closed_form() {
        let cell = LstmCell::zeros(LstmConfig { hidden_dim: 3, input_dim: 2 }).unwrap();
        let prev = CellState { h: vec![0.2, 0.1, -0.3], c: vec![1.0, -1.0, 3.0] };
        let (next, tr) = cell.step(&[0.5, 0.5], &prev).unwrap();
        assert!(tr.f.iter().chain(&tr.i).chain(&tr.o).all(|&g| g == 0.5));
        assert!(tr.cand.iter().all(|&g| g == 0.0));
        for k in 0..3 {
            assert!((next.h[k] - 0.5 * libm::tanh(0.5 * prev.c[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn saturated_forget_gate_erases_memory() {
        let mut cell = LstmCell::random(LstmConfig { hidden_dim: 3, input_dim: 2 }, &mut seeded(1)).unwrap();
        cell.weights[0] = Matrix::from_fn(3, 5, |_, _| -100.0);
        cell.biases[0] = vec![0.0; 3];
        let prev = CellState { h: vec![0.5; 3], c: vec![5.0; 3] };
        let (next, tr) = cell.step(&[0.5, 0.5], &prev).unwrap();
        for k in 0..3 {
            assert!(tr.f[k] < 1e-100);
            assert!((next.c[k] - tr.i[k] * tr.cand[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn default_dims_produce_six_dim_output() {
        let cell = LstmCell::random(LstmConfig::default(), &mut seeded(2)).unwrap();
        let (next, _) = cell.step(&[0.1; 8], &CellState::zeros(6)).unwrap();
        assert_eq!(next.h.len(), 6);
        assert_eq!(cell.param_count(), 4 * (6 * 14 + 6));
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let cell = LstmCell::random(LstmConfig { hidden_dim: 3, input_dim: 2 }, &mut seeded(3)).unwrap();
        let (_, traces) = cell.forward_sequence(&[vec![0.3, -0.4], vec![0.1, 0.9]]).unwrap();
        let mut grads = cell.zeros_like();
        cell.backward(&traces, &[vec![0.0; 3], vec![0.0; 3]], &mut grads).unwrap();
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }
}
