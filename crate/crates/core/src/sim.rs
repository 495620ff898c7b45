//! Exact dense statevector simulator over the gate set {H, RY, RZ, CNOT}.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index, so
//! for two qubits the amplitudes are ordered |00⟩, |01⟩, |10⟩, |11⟩ with the
//! left label belonging to qubit 0.
//!
//! Gates mutate the state in place. The free functions at the bottom of the
//! module (`apply_hadamard`, ...) are the value-semantic forms: they leave the
//! input untouched and return a new state.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// |0⟩^⊗n.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::config(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes. The vector length must be a power of two; the
    /// caller is responsible for normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::usage(format!(
                "amplitude count must be a power of two >= 2, got {len}"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::config(format!("register of {n_qubits} qubits is too large")));
        }
        Ok(QuantumState { n_qubits, amplitudes })
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of measuring every qubit in |0⟩.
    #[inline]
    pub fn prob_all_zero(&self) -> f64 {
        self.amplitudes[0].norm_sqr()
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &QuantumState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::usage(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::usage(format!(
                "qubit {qubit} out of range for a {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        let mask = self.mask(qubit)?;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn hadamard(&mut self, qubit: usize) -> Result<()> {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.apply_single(qubit, [[h, h], [h, -h]])
    }

    /// RY(θ) = exp(−iθY/2).
    pub fn ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        check_angle(angle)?;
        let (s, c) = libm::sincos(angle / 2.0);
        let c = Complex64::new(c, 0.0);
        let s = Complex64::new(s, 0.0);
        self.apply_single(qubit, [[c, -s], [s, c]])
    }

    /// RZ(φ) = exp(−iφZ/2) = diag(e^{−iφ/2}, e^{iφ/2}).
    pub fn rz(&mut self, qubit: usize, angle: f64) -> Result<()> {
        check_angle(angle)?;
        let mask = self.mask(qubit)?;
        let (s, c) = libm::sincos(angle / 2.0);
        let lower = Complex64::new(c, -s);
        let upper = Complex64::new(c, s);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & mask == 0 { lower } else { upper };
        }
        Ok(())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(Error::usage(format!("CNOT control and target are both {control}")));
        }
        let cmask = self.mask(control)?;
        let tmask = self.mask(target)?;
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if angle.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("rotation angle must be finite, got {angle}")))
    }
}

pub fn zero_state(n_qubits: usize) -> Result<QuantumState> {
    QuantumState::zero(n_qubits)
}

pub fn apply_hadamard(state: &QuantumState, qubit: usize) -> Result<QuantumState> {
    let mut out = state.clone();
    out.hadamard(qubit)?;
    Ok(out)
}

pub fn apply_ry(state: &QuantumState, qubit: usize, angle: f64) -> Result<QuantumState> {
    let mut out = state.clone();
    out.ry(qubit, angle)?;
    Ok(out)
}

pub fn apply_rz(state: &QuantumState, qubit: usize, angle: f64) -> Result<QuantumState> {
    let mut out = state.clone();
    out.rz(qubit, angle)?;
    Ok(out)
}

pub fn apply_cnot(state: &QuantumState, control: usize, target: usize) -> Result<QuantumState> {
    let mut out = state.clone();
    out.cnot(control, target)?;
    Ok(out)
}
