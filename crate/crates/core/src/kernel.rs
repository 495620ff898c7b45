//! Fidelity kernel over the H / RY·RZ / CNOT-chain feature map.
//!
//! A classical vector `v` is projected to `2n` rotation angles
//! `(θ_0, φ_0, …, θ_{n−1}, φ_{n−1})` by a trainable matrix. The feature map
//! then applies `H` on every wire, `RY(θ_k)` followed by `RZ(φ_k)` on wire
//! `k`, and a linear `CNOT(k, k+1)` chain. The kernel is the probability of
//! reading all zeros after `U(v_a)` followed by `U†(v_b)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::Matrix;
use crate::rng;
use crate::sim::{QuantumState, MAX_QUBITS};

/// Qubit count plus the linear projection from input vectors to angles.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapParams {
    n_qubits: usize,
    /// `(2·n_qubits) × input_dim`; row `2k` drives `θ_k`, row `2k+1` drives `φ_k`.
    pub proj: Matrix,
}

/// Gradients of one kernel value `k(v_a, v_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGradients {
    pub d_proj: Matrix,
    pub d_va: Vec<f64>,
    pub d_vb: Vec<f64>,
}

impl FeatureMapParams {
    pub fn new(n_qubits: usize, proj: Matrix) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::config(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if proj.rows() != 2 * n_qubits || proj.cols() == 0 {
            return Err(Error::config(format!(
                "projection must be {}x(d>0) for {n_qubits} qubits, got {}x{}",
                2 * n_qubits,
                proj.rows(),
                proj.cols()
            )));
        }
        if !proj.is_finite() {
            return Err(Error::config("projection contains non-finite entries"));
        }
        Ok(FeatureMapParams { n_qubits, proj })
    }

    pub fn zeros(n_qubits: usize, input_dim: usize) -> Result<Self> {
        Self::new(n_qubits, Matrix::zeros(2 * n_qubits, input_dim))
    }

    /// Entries drawn uniformly from `[−0.5, 0.5] / √input_dim`.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, input_dim: usize, rng: &mut R) -> Result<Self> {
        let bound = 0.5 / libm::sqrt(input_dim as f64);
        let proj = Matrix::from_fn(2 * n_qubits, input_dim, |_, _| rng::symmetric(rng, bound));
        Self::new(n_qubits, proj)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.proj.cols()
    }

    #[inline]
    pub fn n_angles(&self) -> usize {
        2 * self.n_qubits
    }

    pub fn encode_angles(&self, v: &[f64]) -> Result<Vec<f64>> {
        ensure_len!("feature-map input", v.len(), self.input_dim());
        self.proj.matvec(v)
    }

    pub fn prepare_feature_state(&self, v: &[f64]) -> Result<QuantumState> {
        let angles = self.encode_angles(v)?;
        let mut state = QuantumState::zero(self.n_qubits)?;
        apply_feature_map(&mut state, &angles)?;
        Ok(state)
    }

    pub fn kernel(&self, v_a: &[f64], v_b: &[f64]) -> Result<f64> {
        let a = self.encode_angles(v_a)?;
        let b = self.encode_angles(v_b)?;
        kernel_from_angles(self.n_qubits, &a, &b)
    }

    /// Kernel value together with its gradients; the angle gradients come
    /// from the parameter-shift rule and are chained through the projection.
    pub fn kernel_with_grad(&self, v_a: &[f64], v_b: &[f64]) -> Result<(f64, KernelGradients)> {
        let a = self.encode_angles(v_a)?;
        let b = self.encode_angles(v_b)?;
        let value = kernel_from_angles(self.n_qubits, &a, &b)?;
        let (ga, gb) = angle_gradients(self.n_qubits, &a, &b)?;
        let mut d_proj = Matrix::zeros(self.proj.rows(), self.proj.cols());
        d_proj.add_outer(1.0, &ga, v_a)?;
        d_proj.add_outer(1.0, &gb, v_b)?;
        let d_va = self.proj.matvec_t(&ga)?;
        let d_vb = self.proj.matvec_t(&gb)?;
        Ok((value, KernelGradients { d_proj, d_va, d_vb }))
    }

    pub fn kernel_grad(&self, v_a: &[f64], v_b: &[f64]) -> Result<KernelGradients> {
        self.kernel_with_grad(v_a, v_b).map(|(_, g)| g)
    }

    /// Symmetric matrix of pairwise kernels. Feature states are prepared once
    /// per vector and the entries are taken as squared overlaps, which equals
    /// the compositional `U†U` evaluation.
    pub fn gram_matrix(&self, vs: &[Vec<f64>]) -> Result<Matrix> {
        let states = vs
            .iter()
            .map(|v| self.prepare_feature_state(v))
            .collect::<Result<Vec<_>>>()?;
        let n = vs.len();
        let mut gram = Matrix::zeros(n, n);
        for i in 0..n {
            gram.set(i, i, 1.0);
            for j in 0..i {
                let k = states[i].inner_product(&states[j])?.norm_sqr();
                gram.set(i, j, k);
                gram.set(j, i, k);
            }
        }
        Ok(gram)
    }
}

fn check_angles(n_qubits: usize, angles: &[f64]) -> Result<()> {
    ensure_len!("angle vector", angles.len(), 2 * n_qubits);
    Ok(())
}

/// `U(angles)` applied to `state`.
pub fn apply_feature_map(state: &mut QuantumState, angles: &[f64]) -> Result<()> {
    let n = state.n_qubits();
    check_angles(n, angles)?;
    for q in 0..n {
        state.hadamard(q)?;
    }
    for q in 0..n {
        state.ry(q, angles[2 * q])?;
        state.rz(q, angles[2 * q + 1])?;
    }
    for q in 0..n.saturating_sub(1) {
        state.cnot(q, q + 1)?;
    }
    Ok(())
}

/// `U†(angles)`: the gates of [`apply_feature_map`] inverted, in reverse order.
pub fn apply_feature_map_adjoint(state: &mut QuantumState, angles: &[f64]) -> Result<()> {
    let n = state.n_qubits();
    check_angles(n, angles)?;
    for q in (0..n.saturating_sub(1)).rev() {
        state.cnot(q, q + 1)?;
    }
    for q in (0..n).rev() {
        state.rz(q, -angles[2 * q + 1])?;
        state.ry(q, -angles[2 * q])?;
    }
    for q in (0..n).rev() {
        state.hadamard(q)?;
    }
    Ok(())
}

/// `|⟨0|U†(b) U(a)|0⟩|²` evaluated on the circuit directly.
pub fn kernel_from_angles(n_qubits: usize, a: &[f64], b: &[f64]) -> Result<f64> {
    let mut state = QuantumState::zero(n_qubits)?;
    apply_feature_map(&mut state, a)?;
    apply_feature_map_adjoint(&mut state, b)?;
    Ok(state.prob_all_zero())
}

/// Parameter-shift derivatives of the kernel with respect to every angle of
/// `U(a)` and of `U(b)`: `∂k/∂x = ½·[k(x + π/2) − k(x − π/2)]`.
pub fn angle_gradients(n_qubits: usize, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_angles(n_qubits, a)?;
    check_angles(n_qubits, b)?;
    let mut shifted = a.to_vec();
    let mut ga = vec![0.0; a.len()];
    for m in 0..a.len() {
        shifted[m] = a[m] + FRAC_PI_2;
        let plus = kernel_from_angles(n_qubits, &shifted, b)?;
        shifted[m] = a[m] - FRAC_PI_2;
        let minus = kernel_from_angles(n_qubits, &shifted, b)?;
        shifted[m] = a[m];
        ga[m] = 0.5 * (plus - minus);
    }
    let mut shifted = b.to_vec();
    let mut gb = vec![0.0; b.len()];
    for m in 0..b.len() {
        shifted[m] = b[m] + FRAC_PI_2;
        let plus = kernel_from_angles(n_qubits, a, &shifted)?;
        shifted[m] = b[m] - FRAC_PI_2;
        let minus = kernel_from_angles(n_qubits, a, &shifted)?;
        shifted[m] = b[m];
        gb[m] = 0.5 * (plus - minus);
    }
    Ok((ga, gb))
}

pub fn encode_angles(v: &[f64], params: &FeatureMapParams) -> Result<Vec<f64>> {
    params.encode_angles(v)
}

pub fn prepare_feature_state(v: &[f64], params: &FeatureMapParams) -> Result<QuantumState> {
    params.prepare_feature_state(v)
}

pub fn kernel(v_a: &[f64], v_b: &[f64], params: &FeatureMapParams) -> Result<f64> {
    params.kernel(v_a, v_b)
}

pub fn kernel_grad(v_a: &[f64], v_b: &[f64], params: &FeatureMapParams) -> Result<KernelGradients> {
    params.kernel_grad(v_a, v_b)
}

pub fn gram_matrix(vs: &[Vec<f64>], params: &FeatureMapParams) -> Result<Matrix> {
    params.gram_matrix(vs)
}
