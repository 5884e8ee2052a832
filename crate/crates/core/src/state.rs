//! Dense state vectors.
//!
//! Basis convention: the amplitude index is the bitstring read with qubit 0
//! as the most significant bit, so on 3 qubits index `0b100` is `|100>` with
//! qubit 0 set. Every module shares this convention.

use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::DiagonalHamiltonian;
use crate::linalg::{self, CMatrix};
use crate::pauli::{PauliString, PauliTerm};

/// Largest register a [`StateVector`] may hold.
pub const MAX_QUBITS: usize = 24;

/// Largest domain accepted for dense local operators.
pub const MAX_DOMAIN_QUBITS: usize = 10;

/// Norm drift above this value before renormalization is logged.
pub const NORM_DRIFT_WARN: f64 = 1e-8;

/// Tolerance on the imaginary part of a Hermitian expectation value.
pub const EXPECT_IMAG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::invalid("state needs at least one qubit"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::Resource {
            what: "qubit count",
            requested: n_qubits,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

impl StateVector {
    /// Uniform superposition, the Hadamard layer applied to `|0...0>`.
    pub fn plus_state(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(StateVector {
            n_qubits,
            amps: vec![a; dim],
        })
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wraps and normalizes raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {dim} is not a power of two >= 2")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_register(n_qubits)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numerical("non-finite amplitude".into()));
        }
        let mut s = StateVector { n_qubits, amps };
        let norm = s.norm();
        if norm == 0.0 {
            return Err(Error::Numerical("zero vector cannot be normalized".into()));
        }
        s.scale(norm.recip());
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// Rescales to unit norm and returns the drift `|norm - 1|` seen beforehand.
    pub(crate) fn renormalize(&mut self) -> Result<f64> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("state norm is {norm}")));
        }
        let drift = (norm - 1.0).abs();
        if drift > NORM_DRIFT_WARN {
            warn!("state norm drifted by {drift:.3e} before renormalization");
        }
        self.scale(norm.recip());
        Ok(drift)
    }

    fn check_support(&self, p: &PauliString) -> Result<()> {
        match p.max_qubit() {
            Some(q) if q >= self.n_qubits => Err(Error::invalid(format!(
                "pauli string {p} acts outside a {}-qubit register",
                self.n_qubits
            ))),
            _ => Ok(()),
        }
    }

    /// `<psi|P|psi>`.
    pub fn expect(&self, p: &PauliString) -> Result<Complex64> {
        self.check_support(p)?;
        let all: Vec<usize> = (0..self.n_qubits).collect();
        let action = p.basis_action(&all);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            let (j, phase) = action.apply(i);
            acc += self.amps[j].conj() * phase * a;
        }
        Ok(acc)
    }

    /// Real expectation of a Hermitian Pauli string; errors if the imaginary
    /// part exceeds [`EXPECT_IMAG_TOL`].
    pub fn expect_real(&self, p: &PauliString) -> Result<f64> {
        let v = self.expect(p)?;
        if v.im.abs() > EXPECT_IMAG_TOL {
            return Err(Error::Numerical(format!("expectation of {p} has imaginary part {:e}", v.im)));
        }
        Ok(v.re)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_same_size(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Euclidean distance of the amplitude vectors; sensitive to global phase.
    pub fn norm_distance(&self, other: &StateVector) -> Result<f64> {
        self.check_same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `exp(-i angle A) |psi>` with `A = sum_k c_k P_k`, exact on the union of supports.
    pub fn apply_pauli_rotation(&self, terms: &[(f64, PauliString)], angle: f64) -> Result<StateVector> {
        if !angle.is_finite() {
            return Err(Error::invalid("rotation angle must be finite"));
        }
        let mut domain = Vec::new();
        let mut weighted = Vec::with_capacity(terms.len());
        for &(c, p) in terms {
            self.check_support(&p)?;
            weighted.push(PauliTerm::real(c, p)?);
            domain.extend(p.qubits());
        }
        domain.sort_unstable();
        domain.dedup();
        let mut out = self.clone();
        if domain.is_empty() {
            // Only identity strings: a global phase.
            let total: f64 = terms.iter().map(|(c, _)| c).sum();
            let phase = Complex64::from_polar(1.0, -angle * total);
            out.amps.iter_mut().for_each(|a| *a *= phase);
            return Ok(out);
        }
        let layout = DomainLayout::new(self.n_qubits, &domain)?;
        let a = local_operator(&weighted, &layout.qubits);
        let u = linalg::unitary_exp(&a, angle)?;
        out.apply_local_in_place(&layout, &u);
        out.renormalize()?;
        Ok(out)
    }

    /// Amplitude `i` scaled by `exp(-t E_i)`, then renormalized.
    ///
    /// Weights are shifted by the minimum energy so the largest is 1.
    pub fn apply_imaginary_time(&self, energies: &[f64], t: f64) -> Result<StateVector> {
        if energies.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: energies.len(),
            });
        }
        if !t.is_finite() {
            return Err(Error::invalid("imaginary time must be finite"));
        }
        let shift = if t >= 0.0 {
            energies.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let mut out = self.clone();
        for (a, &e) in out.amps.iter_mut().zip(energies) {
            *a *= (-t * (e - shift)).exp();
        }
        let norm = out.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical("imaginary-time weights underflowed on the whole support".into()));
        }
        out.scale(norm.recip());
        Ok(out)
    }

    pub fn apply_diagonal_imaginary(&self, h: &DiagonalHamiltonian, t: f64) -> Result<StateVector> {
        if h.n_qubits() != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: h.n_qubits(),
            });
        }
        self.apply_imaginary_time(&h.energies(), t)
    }

    /// Reduced density matrix on `layout`, local index convention of [`DomainLayout`].
    pub(crate) fn reduced_density(&self, layout: &DomainLayout) -> CMatrix {
        let k = layout.dim();
        let mut rho = CMatrix::zeros(k, k);
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        for base in layout.bases() {
            for (j, off) in layout.offsets.iter().enumerate() {
                buf[j] = self.amps[base | off];
            }
            for a in 0..k {
                let va = buf[a];
                if va == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..k {
                    rho[(a, b)] += va * buf[b].conj();
                }
            }
        }
        rho
    }

    /// Applies a `2^k x 2^k` operator on the domain of `layout` (no renormalization).
    pub(crate) fn apply_local_in_place(&mut self, layout: &DomainLayout, op: &CMatrix) {
        let k = layout.dim();
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        for base in layout.bases() {
            for (j, off) in layout.offsets.iter().enumerate() {
                buf[j] = self.amps[base | off];
            }
            for (a, off) in layout.offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..k {
                    acc += op[(a, b)] * buf[b];
                }
                self.amps[base | off] = acc;
            }
        }
    }

    /// Binary dump: `u32` qubit count then interleaved `f64` re/im, little endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 16 * self.dim());
        out.extend_from_slice(&(self.n_qubits as u32).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::invalid("state dump shorter than its header"));
        }
        let n = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
        check_register(n)?;
        let dim = 1usize << n;
        if bytes.len() != 4 + 16 * dim {
            return Err(Error::SizeMismatch {
                expected: 4 + 16 * dim,
                found: bytes.len(),
            });
        }
        let amps = bytes[4..]
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn write_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_dump(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Index bookkeeping for an operator acting on a subset of qubits.
///
/// Local index bit `k - 1 - m` carries qubit `qubits[m]`, matching the global
/// most-significant-first convention.
#[derive(Debug, Clone)]
pub(crate) struct DomainLayout {
    pub qubits: Vec<usize>,
    pub offsets: Vec<usize>,
    mask: usize,
    full_dim: usize,
}

impl DomainLayout {
    pub fn new(n_qubits: usize, domain: &[usize]) -> Result<Self> {
        let mut qubits = domain.to_vec();
        qubits.sort_unstable();
        qubits.dedup();
        if qubits.is_empty() {
            return Err(Error::invalid("empty domain"));
        }
        if qubits.len() > MAX_DOMAIN_QUBITS {
            return Err(Error::Resource {
                what: "domain size",
                requested: qubits.len(),
                limit: MAX_DOMAIN_QUBITS,
            });
        }
        if let Some(&q) = qubits.last() {
            if q >= n_qubits {
                return Err(Error::invalid(format!("domain qubit {q} outside {n_qubits}-qubit register")));
            }
        }
        let k = qubits.len();
        let global_bit = |q: usize| 1usize << (n_qubits - 1 - q);
        let mask = qubits.iter().fold(0, |m, &q| m | global_bit(q));
        let offsets = (0..1usize << k)
            .map(|j| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| (j >> (k - 1 - m)) & 1 == 1)
                    .fold(0, |acc, (_, &q)| acc | global_bit(q))
            })
            .collect();
        Ok(DomainLayout {
            qubits,
            offsets,
            mask,
            full_dim: 1 << n_qubits,
        })
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    /// Global indices whose domain bits are all zero.
    pub fn bases(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask;
        let full = self.full_dim;
        std::iter::successors(Some(0usize), move |&i| {
            let next = ((i | mask) + 1) & !mask;
            (next < full && next != 0).then_some(next)
        })
    }
}

/// Dense matrix of `sum_k c_k P_k` on `domain` (supports must lie inside).
pub(crate) fn local_operator(terms: &[PauliTerm], domain: &[usize]) -> CMatrix {
    let dim = 1usize << domain.len();
    let mut m = CMatrix::zeros(dim, dim);
    for term in terms {
        let action = term.string.basis_action(domain);
        for col in 0..dim {
            let (row, phase) = action.apply(col);
            m[(row, col)] += term.coefficient * phase;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plus_states() {
        let s = StateVector::plus_state(1).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let s = StateVector::plus_state(2).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-15));
        let s = StateVector::plus_state(6).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a.re - 0.125).abs() < 1e-15));
        assert!(matches!(StateVector::plus_state(MAX_QUBITS + 1), Err(Error::Resource { .. })));
        assert!(StateVector::plus_state(0).is_err());
    }

    #[test]
    fn expectations_on_single_qubit() {
        let plus = StateVector::plus_state(1).unwrap();
        assert_abs_diff_eq!(plus.expect_real(&p("X0")).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(plus.expect_real(&p("Z0")).unwrap(), 0.0, epsilon = 1e-14);
        let y_plus = StateVector::from_amplitudes(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(y_plus.expect_real(&p("Y0")).unwrap(), 1.0, epsilon = 1e-14);
        assert!(plus.expect(&p("Z1")).is_err());
    }

    #[test]
    fn msb_convention() {
        // |10> on 2 qubits: qubit 0 set, index 0b10.
        let s = StateVector::basis_state(2, 0b10).unwrap();
        assert_abs_diff_eq!(s.expect_real(&p("Z0")).unwrap(), -1.0);
        assert_abs_diff_eq!(s.expect_real(&p("Z1")).unwrap(), 1.0);
    }

    #[test]
    fn rotation_by_y_matches_closed_form() {
        let tau = 0.3f64;
        let s = StateVector::plus_state(1).unwrap();
        let out = s.apply_pauli_rotation(&[(1.0, p("Y0"))], tau).unwrap();
        let a0 = (tau.cos() - tau.sin()) * FRAC_1_SQRT_2;
        let a1 = (tau.cos() + tau.sin()) * FRAC_1_SQRT_2;
        assert_abs_diff_eq!(out.amplitudes()[0].re, a0, epsilon = 1e-13);
        assert_abs_diff_eq!(out.amplitudes()[1].re, a1, epsilon = 1e-13);
        assert_abs_diff_eq!(out.amplitudes()[0].im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn rotation_edge_cases() {
        let s = StateVector::plus_state(2).unwrap();
        let same = s.apply_pauli_rotation(&[(0.7, p("X0*Y1"))], 0.0).unwrap();
        assert!(same.norm_distance(&s).unwrap() < 1e-14);

        let zero = StateVector::basis_state(1, 0).unwrap();
        let out = zero.apply_pauli_rotation(&[(1.0, p("Z0"))], 0.8).unwrap();
        assert_abs_diff_eq!(out.probabilities()[0], 1.0, epsilon = 1e-14);
        let phase = out.amplitudes()[0];
        assert_abs_diff_eq!(phase.arg(), -0.8, epsilon = 1e-13);
    }

    #[test]
    fn rotation_on_non_adjacent_domain() {
        // exp(-i pi/4 * X0 X2) on |000>: (|000> - i|101>)/sqrt2
        let s = StateVector::basis_state(3, 0).unwrap();
        let out = s
            .apply_pauli_rotation(&[(1.0, p("X0*X2"))], std::f64::consts::FRAC_PI_4)
            .unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-13);
        assert_abs_diff_eq!(out.amplitudes()[0b101].im, -FRAC_1_SQRT_2, epsilon = 1e-13);
    }

    #[test]
    fn imaginary_time_on_z() {
        let s = StateVector::plus_state(1).unwrap();
        let t = 0.9f64;
        let out = s.apply_imaginary_time(&[1.0, -1.0], t).unwrap();
        let n = ((-2.0 * t).exp() + (2.0 * t).exp()).sqrt();
        assert_abs_diff_eq!(out.amplitudes()[0].re, (-t).exp() / n, epsilon = 1e-14);
        assert_abs_diff_eq!(out.amplitudes()[1].re, t.exp() / n, epsilon = 1e-14);
        let same = s.apply_imaginary_time(&[1.0, -1.0], 0.0).unwrap();
        assert!(same.norm_distance(&s).unwrap() < 1e-15);
        // Huge t does not overflow thanks to the shift.
        let far = s.apply_imaginary_time(&[1.0, -1.0], 1e4).unwrap();
        assert_abs_diff_eq!(far.probabilities()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn distances_and_fidelities() {
        let zero = StateVector::basis_state(1, 0).unwrap();
        let one = StateVector::basis_state(1, 1).unwrap();
        let plus = StateVector::plus_state(1).unwrap();
        assert_abs_diff_eq!(zero.norm_distance(&zero).unwrap(), 0.0);
        assert_abs_diff_eq!(zero.norm_distance(&one).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let minus_zero = StateVector::from_amplitudes(vec![c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(zero.norm_distance(&minus_zero).unwrap(), 2.0);
        assert_abs_diff_eq!(zero.fidelity(&zero).unwrap(), 1.0);
        assert_abs_diff_eq!(zero.fidelity(&one).unwrap(), 0.0);
        assert_abs_diff_eq!(plus.fidelity(&zero).unwrap(), 0.5, epsilon = 1e-15);
        let two = StateVector::plus_state(2).unwrap();
        assert!(matches!(zero.fidelity(&two), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn dump_round_trip() {
        let s = StateVector::plus_state(3)
            .unwrap()
            .apply_pauli_rotation(&[(0.4, p("Y0*X2"))], 0.3)
            .unwrap();
        let back = StateVector::from_bytes(&s.to_bytes()).unwrap();
        assert_eq!(back, s);
        assert_eq!(&s.to_bytes()[..4], &3u32.to_le_bytes());
        assert!(StateVector::from_bytes(&[1, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn layout_bases_cover_complement() {
        let layout = DomainLayout::new(4, &[1, 3]).unwrap();
        let bases: Vec<usize> = layout.bases().collect();
        assert_eq!(bases, vec![0b0000, 0b0010, 0b1000, 0b1010]);
        assert_eq!(layout.offsets, vec![0b0000, 0b0001, 0b0100, 0b0101]);
    }

    #[test]
    fn reduced_density_of_product_state() {
        // qubit 0 in |1>, qubit 1 in |+>
        let s = StateVector::from_amplitudes(vec![c(0., 0.), c(0., 0.), c(1., 0.), c(1., 0.)]).unwrap();
        let rho = s.reduced_density(&DomainLayout::new(2, &[0]).unwrap());
        assert_abs_diff_eq!(rho[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho[(0, 0)].re, 0.0, epsilon = 1e-15);
        let rho = s.reduced_density(&DomainLayout::new(2, &[1]).unwrap());
        assert!(rho.iter().all(|z| (z.re - 0.5).abs() < 1e-15));
    }
}
