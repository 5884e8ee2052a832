//! Dense reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qite_core::hamiltonian::DiagonalHamiltonian;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit matrix for a letter in `IXYZ`.
pub fn pauli_matrix(letter: char) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match letter {
        'I' => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad letter {letter}"),
    }
}

/// Kronecker product over qubits 0..n (qubit 0 leftmost, most significant).
pub fn dense_pauli(letters: &[char]) -> CMat {
    letters
        .iter()
        .fold(CMat::identity(1, 1), |acc, &l| acc.kronecker(&pauli_matrix(l)))
}

/// `a I + sum b_i Z_i + sum c_ij Z_i Z_j` built from Kronecker products.
pub fn dense_hamiltonian(h: &DiagonalHamiltonian) -> CMat {
    let n = h.n_qubits();
    let dim = 1 << n;
    let mut m = CMat::identity(dim, dim) * c(h.constant(), 0.0);
    for (i, &b) in h.linear().iter().enumerate() {
        let mut letters = vec!['I'; n];
        letters[i] = 'Z';
        m += dense_pauli(&letters) * c(b, 0.0);
    }
    for ((i, j), cij) in h.quadratic() {
        let mut letters = vec!['I'; n];
        letters[i] = 'Z';
        letters[j] = 'Z';
        m += dense_pauli(&letters) * c(cij, 0.0);
    }
    m
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let norm = a.iter().map(|v| v.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * c(0.5f64.powi(s), 0.0);
    let dim = a.nrows();
    let mut result = CMat::identity(dim, dim);
    let mut term = CMat::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled * c(1.0 / k as f64, 0.0);
        result += &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

pub fn plus_vector(n: usize) -> DVector<Complex64> {
    let dim = 1 << n;
    DVector::from_element(dim, c((dim as f64).sqrt().recip(), 0.0))
}

/// Normalized `exp(-t H)|+>` with a dense exponential.
pub fn dense_ite(h: &DiagonalHamiltonian, t: f64) -> DVector<Complex64> {
    let m = dense_hamiltonian(h) * c(-t, 0.0);
    let v = expm(&m) * plus_vector(h.n_qubits());
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Writes one uncaptured line so it shows in normal `cargo test` output.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance {criterion:>2}] {status}: {detail}");
}
