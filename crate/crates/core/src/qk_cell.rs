//! The QK-LSTM cell.
//!
//! Each gate pre-activation is a weighted sum of fidelity kernels between the
//! step input `v_t = [h_{t−1}, x_t]` and a set of learned reference vectors,
//! plus a bias. Gate values are scalars and are broadcast over the hidden
//! dimension. The candidate gate additionally carries a per-dimension bias
//! vector so that the cell state is genuinely vector valued.
//!
//! In shared mode one feature map serves all four gates and each step
//! evaluates `N` kernels; with per-gate kernels every gate owns a feature map
//! and a step evaluates `4N`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::kernel::FeatureMapParams;
use crate::linalg::{axpy, Matrix};
use crate::model::{
    concat_input, matrix_shape, sigmoid, sigmoid_prime_from_output, tanh, tanh_prime_from_output, CellState,
    RecurrentCell,
};
use crate::params::ParamSet;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget,
    Input,
    Candidate,
    Output,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Gate::Forget => "f",
            Gate::Input => "i",
            Gate::Candidate => "c",
            Gate::Output => "o",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QkConfig {
    pub hidden_dim: usize,
    pub input_dim: usize,
    pub n_qubits: usize,
    pub n_refs: usize,
    pub per_gate_kernels: bool,
}

impl Default for QkConfig {
    fn default() -> Self {
        QkConfig { hidden_dim: 6, input_dim: 8, n_qubits: 4, n_refs: 4, per_gate_kernels: false }
    }
}

impl QkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.input_dim == 0 {
            return Err(Error::config("hidden and input dimensions must be positive"));
        }
        if self.n_refs == 0 {
            return Err(Error::config("at least one reference vector is required"));
        }
        if self.n_qubits == 0 || self.n_qubits > crate::sim::MAX_QUBITS {
            return Err(Error::config(format!("unsupported qubit count {}", self.n_qubits)));
        }
        Ok(())
    }

    fn n_feature_maps(&self) -> usize {
        if self.per_gate_kernels {
            4
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkLstmCell {
    config: QkConfig,
    /// `N × (hidden_dim + input_dim)`, one reference vector per row.
    pub refs: Matrix,
    /// `4 × N`, rows ordered forget, input, candidate, output.
    pub alphas: Matrix,
    /// Scalar biases of the forget, input and output gates.
    pub gate_bias: [f64; 3],
    /// Per-dimension candidate bias.
    pub cand_bias: Vec<f64>,
    /// One entry in shared mode, four (gate order) otherwise.
    pub feature_maps: Vec<FeatureMapParams>,
}

/// Forward cache of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct QkStepTrace {
    pub v: Vec<f64>,
    /// `kernels[m][j] = k_m(v_t, v_j)` for every feature map `m`.
    pub kernels: Vec<Vec<f64>>,
    pub f: f64,
    pub i: f64,
    pub o: f64,
    pub cand: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

impl QkLstmCell {
    /// Zero-initialized cell.
    pub fn zeros(config: QkConfig) -> Result<Self> {
        config.validate()?;
        let d = config.hidden_dim + config.input_dim;
        let feature_maps = (0..config.n_feature_maps())
            .map(|_| FeatureMapParams::zeros(config.n_qubits, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(QkLstmCell {
            config,
            refs: Matrix::zeros(config.n_refs, d),
            alphas: Matrix::zeros(4, config.n_refs),
            gate_bias: [0.0; 3],
            cand_bias: vec![0.0; config.hidden_dim],
            feature_maps,
        })
    }

    /// Reference vectors uniform in `[−1, 1]`; alphas uniform in
    /// `[−1/√N, 1/√N]`; biases zero except the forget bias, which is `+1`.
    pub fn random<R: Rng + ?Sized>(config: QkConfig, rng: &mut R) -> Result<Self> {
        let mut cell = Self::zeros(config)?;
        cell.refs.as_mut_slice().iter_mut().for_each(|x| *x = rng::symmetric(rng, 1.0));
        let bound = 1.0 / libm::sqrt(config.n_refs as f64);
        cell.alphas.as_mut_slice().iter_mut().for_each(|x| *x = rng::symmetric(rng, bound));
        cell.gate_bias = [1.0, 0.0, 0.0];
        let d = config.hidden_dim + config.input_dim;
        for fm in cell.feature_maps.iter_mut() {
            *fm = FeatureMapParams::random(config.n_qubits, d, rng)?;
        }
        Ok(cell)
    }

    pub fn config(&self) -> &QkConfig {
        &self.config
    }

    pub fn n_refs(&self) -> usize {
        self.config.n_refs
    }

    /// Index into `feature_maps` used by `gate`.
    #[inline]
    pub fn feature_map_index(&self, gate: Gate) -> usize {
        if self.feature_maps.len() == 1 {
            0
        } else {
            gate.index()
        }
    }

    pub fn feature_map(&self, gate: Gate) -> &FeatureMapParams {
        &self.feature_maps[self.feature_map_index(gate)]
    }

    /// Kernel evaluations a single step performs.
    pub fn kernels_per_step(&self) -> usize {
        self.feature_maps.len() * self.n_refs()
    }

    fn scalar_bias(&self, gate: Gate) -> f64 {
        match gate {
            Gate::Forget => self.gate_bias[0],
            Gate::Input => self.gate_bias[1],
            Gate::Output => self.gate_bias[2],
            Gate::Candidate => 0.0,
        }
    }

    fn kernel_values(&self, v: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.feature_maps
            .iter()
            .map(|fm| (0..self.n_refs()).map(|j| fm.kernel(v, self.refs.row(j))).collect())
            .collect()
    }

    fn weighted_sum(&self, gate: Gate, kernels: &[Vec<f64>]) -> f64 {
        let k = &kernels[self.feature_map_index(gate)];
        self.alphas.row(gate.index()).iter().zip(k).map(|(a, k)| a * k).sum()
    }

    /// `Σ_j α_j^(gate) k(v, v_j) + b_gate`. For the candidate gate the scalar
    /// part alone is returned; its per-dimension bias is added in [`step`].
    ///
    /// [`step`]: RecurrentCell::step
    pub fn gate_preactivation(&self, gate: Gate, v: &[f64]) -> Result<f64> {
        ensure_len!("gate input", v.len(), self.refs.cols());
        let fm = self.feature_map(gate);
        let mut acc = self.scalar_bias(gate);
        for (j, a) in self.alphas.row(gate.index()).iter().enumerate() {
            acc += a * fm.kernel(v, self.refs.row(j))?;
        }
        Ok(acc)
    }

    fn check_structure(&self) -> Result<()> {
        let d = self.config.hidden_dim + self.config.input_dim;
        self.refs.check_shape("reference vectors", self.config.n_refs, d)?;
        self.alphas.check_shape("kernel weights", 4, self.config.n_refs)?;
        ensure_len!("candidate bias", self.cand_bias.len(), self.config.hidden_dim);
        ensure_len!("feature maps", self.feature_maps.len(), self.config.n_feature_maps());
        for fm in &self.feature_maps {
            ensure_len!("feature map input dimension", fm.input_dim(), d);
        }
        Ok(())
    }
}

impl RecurrentCell for QkLstmCell {
    type Trace = QkStepTrace;

    fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn step(&self, x: &[f64], prev: &CellState) -> Result<(CellState, QkStepTrace)> {
        self.check_structure()?;
        let hd = self.config.hidden_dim;
        ensure_len!("previous cell state", prev.c.len(), hd);
        let v = concat_input(&prev.h, x, hd, self.config.input_dim)?;
        let kernels = self.kernel_values(&v)?;

        let f = sigmoid(self.weighted_sum(Gate::Forget, &kernels) + self.gate_bias[0]);
        let i = sigmoid(self.weighted_sum(Gate::Input, &kernels) + self.gate_bias[1]);
        let o = sigmoid(self.weighted_sum(Gate::Output, &kernels) + self.gate_bias[2]);
        let cand_sum = self.weighted_sum(Gate::Candidate, &kernels);
        let cand: Vec<f64> = self.cand_bias.iter().map(|b| tanh(cand_sum + b)).collect();

        let c: Vec<f64> = prev.c.iter().zip(&cand).map(|(cp, g)| f * cp + i * g).collect();
        let tanh_c: Vec<f64> = c.iter().map(|&x| tanh(x)).collect();
        let h: Vec<f64> = tanh_c.iter().map(|t| o * t).collect();

        let trace = QkStepTrace { v, kernels, f, i, o, cand, c_prev: prev.c.clone(), c: c.clone(), tanh_c };
        Ok((CellState { h, c }, trace))
    }

    fn backward(&self, traces: &[QkStepTrace], grad_h: &[Vec<f64>], grads: &mut Self) -> Result<Vec<Vec<f64>>> {
        ensure_len!("upstream hidden gradients", grad_h.len(), traces.len());
        grads.check_structure()?;
        let hd = self.config.hidden_dim;
        let n_refs = self.n_refs();
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut grad_x = vec![Vec::new(); traces.len()];
        let mut dkernels = vec![vec![0.0; n_refs]; self.feature_maps.len()];

        for t in (0..traces.len()).rev() {
            let tr = &traces[t];
            ensure_len!("upstream hidden gradient", grad_h[t].len(), hd);
            let mut d_o = 0.0;
            let mut d_f = 0.0;
            let mut d_i = 0.0;
            let mut d_cand_sum = 0.0;
            let mut dc_prev = vec![0.0; hd];
            for k in 0..hd {
                let dh = grad_h[t][k] + dh_next[k];
                d_o += dh * tr.tanh_c[k];
                let dc = dc_next[k] + dh * tr.o * tanh_prime_from_output(tr.tanh_c[k]);
                d_f += dc * tr.c_prev[k];
                d_i += dc * tr.cand[k];
                let d_pre_c = dc * tr.i * tanh_prime_from_output(tr.cand[k]);
                grads.cand_bias[k] += d_pre_c;
                d_cand_sum += d_pre_c;
                dc_prev[k] = dc * tr.f;
            }
            let d_pre = [
                d_f * sigmoid_prime_from_output(tr.f),
                d_i * sigmoid_prime_from_output(tr.i),
                d_cand_sum,
                d_o * sigmoid_prime_from_output(tr.o),
            ];
            grads.gate_bias[0] += d_pre[0];
            grads.gate_bias[1] += d_pre[1];
            grads.gate_bias[2] += d_pre[3];

            dkernels.iter_mut().for_each(|row| row.iter_mut().for_each(|x| *x = 0.0));
            for gate in Gate::ALL {
                let g = gate.index();
                let m = self.feature_map_index(gate);
                let k = &tr.kernels[m];
                axpy(grads.alphas.row_mut(g), d_pre[g], k);
                axpy(&mut dkernels[m], d_pre[g], self.alphas.row(g));
            }

            let mut dv = vec![0.0; tr.v.len()];
            for (m, fm) in self.feature_maps.iter().enumerate() {
                for j in 0..n_refs {
                    let dk = dkernels[m][j];
                    if dk == 0.0 {
                        continue;
                    }
                    let kg = fm.kernel_grad(&tr.v, self.refs.row(j))?;
                    axpy(&mut dv, dk, &kg.d_va);
                    axpy(grads.refs.row_mut(j), dk, &kg.d_vb);
                    axpy(grads.feature_maps[m].proj.as_mut_slice(), dk, kg.d_proj.as_slice());
                }
            }
            dh_next.copy_from_slice(&dv[..hd]);
            grad_x[t] = dv[hd..].to_vec();
            dc_next = dc_prev;
        }
        Ok(grad_x)
    }
}

impl ParamSet for QkLstmCell {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f("refs", &matrix_shape(&self.refs), self.refs.as_slice());
        f("alphas", &matrix_shape(&self.alphas), self.alphas.as_slice());
        f("gate_bias", &[3], &self.gate_bias);
        f("cand_bias", &[self.cand_bias.len()], &self.cand_bias);
        if self.feature_maps.len() == 1 {
            f("proj", &matrix_shape(&self.feature_maps[0].proj), self.feature_maps[0].proj.as_slice());
        } else {
            for (gate, fm) in Gate::ALL.iter().zip(&self.feature_maps) {
                f(proj_name(*gate), &matrix_shape(&fm.proj), fm.proj.as_slice());
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        f("refs", self.refs.as_mut_slice());
        f("alphas", self.alphas.as_mut_slice());
        f("gate_bias", &mut self.gate_bias);
        f("cand_bias", &mut self.cand_bias);
        if self.feature_maps.len() == 1 {
            f("proj", self.feature_maps[0].proj.as_mut_slice());
        } else {
            for (gate, fm) in Gate::ALL.iter().zip(self.feature_maps.iter_mut()) {
                f(proj_name(*gate), fm.proj.as_mut_slice());
            }
        }
    }

    fn zeros_like(&self) -> Self {
        QkLstmCell::zeros(self.config).expect("config was validated at construction")
    }
}

fn proj_name(gate: Gate) -> &'static str {
    match gate {
        Gate::Forget => "proj_f",
        Gate::Input => "proj_i",
        Gate::Candidate => "proj_c",
        Gate::Output => "proj_o",
    }
}
