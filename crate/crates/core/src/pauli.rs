//! Pauli strings over up to 64 qubits, stored as a pair of bitmasks.
//!
//! Bit `q` of `x` / `z` refers to qubit `q`. The letter on a qubit is
//! `X` for (1, 0), `Z` for (0, 1) and `Y` for (1, 1); identity letters are
//! never stored, so the all-zero string is the identity.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit index + 1 a [`PauliString`] can address.
pub const MAX_PAULI_QUBITS: usize = 64;

/// Largest domain accepted by [`enumerate_basis`] (4^8 - 1 strings).
pub const MAX_BASIS_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    X,
    Y,
    Z,
}

impl PauliLetter {
    fn bits(self) -> (bool, bool) {
        match self {
            PauliLetter::X => (true, false),
            PauliLetter::Y => (true, true),
            PauliLetter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Option<Self> {
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(PauliLetter::X),
            (true, true) => Some(PauliLetter::Y),
            (false, true) => Some(PauliLetter::Z),
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Pauli operators, identity elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

impl PauliString {
    pub const fn identity() -> Self {
        PauliString { x: 0, z: 0 }
    }

    pub fn single(qubit: usize, letter: PauliLetter) -> Result<Self> {
        Self::from_support(&[(qubit, letter)])
    }

    /// Builds a string from `(qubit, letter)` pairs with strictly increasing qubits.
    pub fn from_support(support: &[(usize, PauliLetter)]) -> Result<Self> {
        let mut out = PauliString::identity();
        let mut prev: Option<usize> = None;
        for &(q, letter) in support {
            if q >= MAX_PAULI_QUBITS {
                return Err(Error::Resource {
                    what: "pauli qubit index",
                    requested: q,
                    limit: MAX_PAULI_QUBITS - 1,
                });
            }
            if prev.is_some_and(|p| q <= p) {
                return Err(Error::invalid(format!(
                    "pauli support indices must be strictly increasing (got {q} after {})",
                    prev.unwrap_or(0)
                )));
            }
            prev = Some(q);
            let (bx, bz) = letter.bits();
            if bx {
                out.x |= 1 << q;
            }
            if bz {
                out.z |= 1 << q;
            }
        }
        Ok(out)
    }

    /// Z on every listed qubit.
    pub fn z_on(qubits: &[usize]) -> Result<Self> {
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        let support: Vec<_> = sorted.into_iter().map(|q| (q, PauliLetter::Z)).collect();
        Self::from_support(&support)
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    /// Highest qubit acted on, `None` for the identity.
    pub fn max_qubit(&self) -> Option<usize> {
        let m = self.support_mask();
        (m != 0).then(|| 63 - m.leading_zeros() as usize)
    }

    pub fn letter_at(&self, qubit: usize) -> Option<PauliLetter> {
        if qubit >= MAX_PAULI_QUBITS {
            return None;
        }
        PauliLetter::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn support(&self) -> Vec<(usize, PauliLetter)> {
        let mut out = Vec::with_capacity(self.weight());
        let mut m = self.support_mask();
        while m != 0 {
            let q = m.trailing_zeros() as usize;
            m &= m - 1;
            if let Some(l) = self.letter_at(q) {
                out.push((q, l));
            }
        }
        out
    }

    pub fn qubits(&self) -> Vec<usize> {
        self.support().into_iter().map(|(q, _)| q).collect()
    }

    /// Whether every qubit of the support lies in `domain`.
    pub fn is_supported_in(&self, domain: &[usize]) -> bool {
        let mask = domain
            .iter()
            .filter(|&&q| q < MAX_PAULI_QUBITS)
            .fold(0u64, |m, &q| m | (1 << q));
        self.support_mask() & !mask == 0
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let sym = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        sym.is_multiple_of(2)
    }

    /// Product `self * other` as `(i^k, r)` with `k` in 0..4.
    pub fn mul_phase_exponent(&self, other: &PauliString) -> (u8, PauliString) {
        let r = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // Per qubit, XY = iZ, YZ = iX, ZX = iY and the reversed orders give -i.
        let mut k: u8 = 0;
        let mut m = self.support_mask() & other.support_mask();
        while m != 0 {
            let q = m.trailing_zeros() as usize;
            m &= m - 1;
            let (Some(a), Some(b)) = (self.letter_at(q), other.letter_at(q)) else {
                continue;
            };
            use PauliLetter::*;
            match (a, b) {
                (X, Y) | (Y, Z) | (Z, X) => k += 1,
                (Y, X) | (Z, Y) | (X, Z) => k += 3,
                _ => {}
            }
        }
        (k % 4, r)
    }

    /// Product `self * other` as `(phase, r)` with `phase` in {1, i, -1, -i}.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let (k, r) = self.mul_phase_exponent(other);
        (i_pow(k), r)
    }

    /// Action on computational basis states when qubit `domain[m]` is bit
    /// `k - 1 - m` of a `k`-bit index.
    ///
    /// Qubits of the support outside `domain` are ignored; callers check
    /// containment first.
    pub(crate) fn basis_action(&self, domain: &[usize]) -> BasisAction {
        let k = domain.len();
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut y_count = 0u32;
        for (m, &q) in domain.iter().enumerate() {
            let bit = 1usize << (k - 1 - m);
            match self.letter_at(q) {
                Some(PauliLetter::X) => flip |= bit,
                Some(PauliLetter::Y) => {
                    flip |= bit;
                    sign |= bit;
                    y_count += 1;
                }
                Some(PauliLetter::Z) => sign |= bit,
                None => {}
            }
        }
        BasisAction {
            flip,
            sign,
            y_phase: (y_count % 4) as u8,
        }
    }
}

/// `P|m> = i^y (-1)^{popcount(m & sign)} |m ^ flip>`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BasisAction {
    pub flip: usize,
    pub sign: usize,
    pub y_phase: u8,
}

impl BasisAction {
    #[inline]
    pub fn apply(&self, m: usize) -> (usize, Complex64) {
        let mut k = self.y_phase;
        if (m & self.sign).count_ones() % 2 == 1 {
            k += 2;
        }
        (m ^ self.flip, i_pow(k))
    }
}

#[inline]
pub(crate) fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("I");
        }
        let parts: Vec<String> = self
            .support()
            .into_iter()
            .map(|(q, l)| format!("{}{}", l.as_char(), q))
            .collect();
        f.write_str(&parts.join("*"))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses the `X0*Z3*Y5` rendering; `I` is the identity.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(PauliString::identity());
        }
        let mut support = Vec::new();
        for part in s.split('*') {
            let part = part.trim();
            let mut chars = part.chars();
            let letter = match chars.next() {
                Some('X') => PauliLetter::X,
                Some('Y') => PauliLetter::Y,
                Some('Z') => PauliLetter::Z,
                _ => return Err(Error::invalid(format!("bad pauli factor '{part}'"))),
            };
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::invalid(format!("bad qubit index in '{part}'")))?;
            support.push((q, letter));
        }
        PauliString::from_support(&support)
    }
}

/// Weighted Pauli string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coefficient: Complex64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: Complex64, string: PauliString) -> Result<Self> {
        if !coefficient.re.is_finite() || !coefficient.im.is_finite() {
            return Err(Error::invalid("pauli term coefficient must be finite"));
        }
        Ok(PauliTerm {
            coefficient,
            string,
        })
    }

    pub fn real(coefficient: f64, string: PauliString) -> Result<Self> {
        Self::new(Complex64::new(coefficient, 0.0), string)
    }
}

/// All non-identity Pauli strings supported inside `domain`.
///
/// Order: a base-4 counter over the sorted domain, the lowest qubit being the
/// most significant digit and letters ordered I < X < Y < Z; the all-identity
/// string (counter value 0) is skipped. For `{0}` this is `[X0, Y0, Z0]`.
pub fn enumerate_basis(domain: &[usize]) -> Result<Vec<PauliString>> {
    let mut qubits = domain.to_vec();
    qubits.sort_unstable();
    qubits.dedup();
    if qubits.is_empty() {
        return Err(Error::invalid("pauli basis domain must be nonempty"));
    }
    if qubits.len() > MAX_BASIS_QUBITS {
        return Err(Error::Resource {
            what: "pauli basis domain size",
            requested: qubits.len(),
            limit: MAX_BASIS_QUBITS,
        });
    }
    if let Some(&q) = qubits.last() {
        if q >= MAX_PAULI_QUBITS {
            return Err(Error::Resource {
                what: "pauli qubit index",
                requested: q,
                limit: MAX_PAULI_QUBITS - 1,
            });
        }
    }
    let k = qubits.len();
    let total = 1usize << (2 * k);
    let mut out = Vec::with_capacity(total - 1);
    for code in 1..total {
        let mut s = PauliString::identity();
        for (m, &q) in qubits.iter().enumerate() {
            let digit = (code >> (2 * (k - 1 - m))) & 3;
            let (bx, bz) = match digit {
                0 => (false, false),
                1 => (true, false),
                2 => (true, true),
                _ => (false, true),
            };
            if bx {
                s.x |= 1 << q;
            }
            if bz {
                s.z |= 1 << q;
            }
        }
        out.push(s);
    }
    Ok(out)
}
