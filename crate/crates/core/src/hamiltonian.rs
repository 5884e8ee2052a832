//! Diagonal optimization Hamiltonians
//! `H = a + sum_i b_i Z_i + sum_{i<j} c_ij Z_i Z_j`
//! and their exact spectra.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::graph::{Bitstring, UnitDiskGraph};
use crate::pauli::{PauliString, PauliTerm};
use crate::state::MAX_QUBITS;

/// Default edge penalty of the independent-set encoding.
pub const DEFAULT_U: f64 = 1.35;

/// Energies closer than this are treated as one level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    n_qubits: usize,
    constant: f64,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
}

/// Which part of `H` a Trotter term came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermLabel {
    Single(usize),
    Pair(usize, usize),
}

impl TermLabel {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            TermLabel::Single(i) => vec![i],
            TermLabel::Pair(i, j) => vec![i, j],
        }
    }
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermLabel::Single(i) => write!(f, "Z{i}"),
            TermLabel::Pair(i, j) => write!(f, "Z{i}*Z{j}"),
        }
    }
}

/// One `h[l]` of the decomposition `H - a = sum_l h[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub label: TermLabel,
    pub terms: Vec<PauliTerm>,
}

impl HamiltonianTerm {
    pub fn support(&self) -> Vec<usize> {
        self.label.qubits()
    }
}

impl DiagonalHamiltonian {
    pub fn new(
        n_qubits: usize,
        constant: f64,
        linear: Vec<f64>,
        quadratic: &[((usize, usize), f64)],
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("hamiltonian needs at least one qubit"));
        }
        if linear.len() != n_qubits {
            return Err(Error::SizeMismatch {
                expected: n_qubits,
                found: linear.len(),
            });
        }
        if !constant.is_finite() || linear.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("hamiltonian coefficients must be finite"));
        }
        let mut quad = BTreeMap::new();
        for &((i, j), c) in quadratic {
            if i == j || i >= n_qubits || j >= n_qubits {
                return Err(Error::invalid(format!("invalid coupling pair ({i}, {j})")));
            }
            if !c.is_finite() {
                return Err(Error::invalid("hamiltonian coefficients must be finite"));
            }
            *quad.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
        }
        Ok(DiagonalHamiltonian {
            n_qubits,
            constant,
            linear,
            quadratic: quad,
        })
    }

    /// Independent-set encoding `-sum n_i + u sum_edges n_i n_j` with `n = (1 - Z)/2`.
    pub fn from_udmis(g: &UnitDiskGraph, u: f64) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::invalid(format!("edge penalty u must be positive, got {u}")));
        }
        if u <= 1.0 {
            warn!("u = {u} <= 1: ground states are not guaranteed to be independent sets");
        }
        let n = g.n_vertices();
        let constant = -(n as f64) / 2.0 + u * g.n_edges() as f64 / 4.0;
        let linear = (0..n).map(|i| 0.5 - u * g.degree(i) as f64 / 4.0).collect();
        let quad: Vec<_> = g.edges().map(|e| (e, u / 4.0)).collect();
        Self::new(n, constant, linear, &quad)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.quadratic.iter().map(|(&k, &v)| (k, v))
    }

    /// Energy of the basis state with index `index` (qubit 0 most significant).
    pub fn energy_of_index(&self, index: usize) -> f64 {
        let n = self.n_qubits;
        let z = |q: usize| if (index >> (n - 1 - q)) & 1 == 1 { -1.0 } else { 1.0 };
        let lin: f64 = self.linear.iter().enumerate().map(|(q, b)| b * z(q)).sum();
        let quad: f64 = self.quadratic.iter().map(|(&(i, j), c)| c * z(i) * z(j)).sum();
        self.constant + lin + quad
    }

    pub fn energy(&self, s: &Bitstring) -> Result<f64> {
        if s.len() != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: s.len(),
            });
        }
        let z = |q: usize| if s.get(q) { -1.0 } else { 1.0 };
        let lin: f64 = self.linear.iter().enumerate().map(|(q, b)| b * z(q)).sum();
        let quad: f64 = self.quadratic.iter().map(|(&(i, j), c)| c * z(i) * z(j)).sum();
        Ok(self.constant + lin + quad)
    }

    /// Energies of all `2^N` basis states, indexed like state amplitudes.
    pub fn energies(&self) -> Vec<f64> {
        (0..1usize << self.n_qubits).map(|i| self.energy_of_index(i)).collect()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::Resource {
                what: "spectrum qubit count",
                requested: self.n_qubits,
                limit: MAX_QUBITS,
            });
        }
        Ok(Spectrum::from_energies(self.n_qubits, &self.energies()))
    }

    /// Single-Z terms by qubit, then coupling terms in lexicographic pair order.
    /// The constant is left out: it only rescales `exp(-tau H)`.
    pub fn term_decomposition(&self) -> Vec<HamiltonianTerm> {
        let mut out = Vec::with_capacity(self.n_qubits + self.quadratic.len());
        for (q, &b) in self.linear.iter().enumerate() {
            out.push(HamiltonianTerm {
                label: TermLabel::Single(q),
                terms: vec![PauliTerm::real(b, PauliString::z_on(&[q]).expect("qubit < 64"))
                    .expect("finite coefficient")],
            });
        }
        for (&(i, j), &c) in &self.quadratic {
            out.push(HamiltonianTerm {
                label: TermLabel::Pair(i, j),
                terms: vec![PauliTerm::real(c, PauliString::z_on(&[i, j]).expect("qubits < 64"))
                    .expect("finite coefficient")],
            });
        }
        out
    }
}

/// One energy level with the basis states (indices) that realize it.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub degeneracy: usize,
    pub states: Vec<usize>,
}

/// Sorted spectrum of a diagonal Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n_qubits: usize,
    levels: Vec<Level>,
}

impl Spectrum {
    pub(crate) fn from_energies(n_qubits: usize, energies: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
        let mut levels: Vec<Level> = Vec::new();
        for i in order {
            let e = energies[i];
            match levels.last_mut() {
                Some(level) if e - level.energy <= LEVEL_TOLERANCE => {
                    level.degeneracy += 1;
                    level.states.push(i);
                }
                _ => levels.push(Level {
                    energy: e,
                    degeneracy: 1,
                    states: vec![i],
                }),
            }
        }
        for level in &mut levels {
            level.states.sort_unstable();
        }
        Spectrum { n_qubits, levels }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert space dimension `d = 2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].energy
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.levels[0].degeneracy
    }

    /// `E_1 - E_0`, `None` when every state is degenerate.
    pub fn gap(&self) -> Option<f64> {
        self.levels.get(1).map(|l| l.energy - self.ground_energy())
    }

    pub fn level_bitstrings(&self, level: usize) -> Vec<Bitstring> {
        self.levels
            .get(level)
            .map(|l| l.states.iter().map(|&i| Bitstring::from_index(i, self.n_qubits)).collect())
            .unwrap_or_default()
    }

    /// Whether an energy counts as a failure: `E > E_0 + delta_e` with
    /// [`LEVEL_TOLERANCE`] slack, so states at the threshold are acceptable.
    pub fn is_failing(&self, energy: f64, delta_e: f64) -> bool {
        energy > self.ground_energy() + delta_e + LEVEL_TOLERANCE
    }

    /// Number of acceptable basis states (the threshold index `r`).
    pub fn acceptable_count(&self, delta_e: f64) -> usize {
        self.levels
            .iter()
            .filter(|l| !self.is_failing(l.energy, delta_e))
            .map(|l| l.degeneracy)
            .sum()
    }

    /// Per-basis-state failure mask, indexed like amplitudes.
    pub fn failing_mask(&self, delta_e: f64) -> Vec<bool> {
        let mut mask = vec![false; self.dim()];
        for level in &self.levels {
            if self.is_failing(level.energy, delta_e) {
                for &i in &level.states {
                    mask[i] = true;
                }
            }
        }
        mask
    }
}
