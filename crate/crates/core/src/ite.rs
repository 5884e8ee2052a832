//! Exact imaginary-time evolution from the uniform superposition.
//!
//! Since every Hamiltonian here is diagonal, `exp(-tH)|+...+>` is an
//! elementwise reweighting; no Trotterization is involved.

use crate::error::{Error, Result};
use crate::hamiltonian::DiagonalHamiltonian;
use crate::state::StateVector;

/// Normalized `exp(-tH)|+>^N`.
pub fn ite_state(h: &DiagonalHamiltonian, t: f64) -> Result<StateVector> {
    StateVector::plus_state(h.n_qubits())?.apply_imaginary_time(&h.energies(), t)
}

/// States at `t = k * tau` for `k = 0..=n_steps`.
pub fn ite_trajectory(h: &DiagonalHamiltonian, tau: f64, n_steps: usize) -> Result<Vec<StateVector>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    let psi0 = StateVector::plus_state(h.n_qubits())?;
    let energies = h.energies();
    (0..=n_steps)
        .map(|k| psi0.apply_imaginary_time(&energies, k as f64 * tau))
        .collect()
}

/// `<psi|H|psi>` including the constant.
pub fn energy_expectation(state: &StateVector, h: &DiagonalHamiltonian) -> Result<f64> {
    if state.n_qubits() != h.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.n_qubits(),
            found: state.n_qubits(),
        });
    }
    Ok(state
        .probabilities()
        .iter()
        .zip(h.energies())
        .map(|(p, e)| p * e)
        .sum())
}
