//! Quantum imaginary time evolution on fixed qubit domains.
//!
//! Each Trotter sub-step `exp(-tau h[l])` is replaced by a unitary
//! `exp(-i tau A)` where `A = sum_I a_I sigma_I` ranges over the non-identity
//! Pauli strings of the term's domain. The real coefficients solve
//!
//! ```text
//! (Re(S + S^T) + lambda) a = -b,   S_IJ = <sigma_I sigma_J>,   b_I = -2 Im <sigma_I h[l]>
//! ```
//!
//! Two solvers are provided. [`SolverKind::PauliSystem`] assembles that
//! system explicitly in the Pauli basis. [`SolverKind::ReducedDensity`]
//! solves the same regularized least-squares problem in the eigenbasis of
//! the domain's reduced density matrix `rho`, where it is diagonal:
//!
//! ```text
//! A~_ij = i (p_i - p_j) h~_ij / (p_i + p_j + lambda / 2^k),   A~_ii = 0
//! ```
//!
//! The second costs `O(8^k)` per sub-step instead of `O(64^k)` and is the
//! default; the two agree to round-off (see the tests).

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UnitDiskGraph;
use crate::hamiltonian::{DiagonalHamiltonian, HamiltonianTerm};
use crate::linalg::{self, CMatrix};
use crate::pauli::{enumerate_basis, PauliString, PauliTerm, MAX_BASIS_QUBITS};
use crate::seed;
use crate::state::{local_operator, DomainLayout, StateVector, MAX_DOMAIN_QUBITS};

/// Default Tikhonov weight on the Pauli coefficients.
pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// Default cap on domain size.
pub const DEFAULT_MAX_DOMAIN: usize = 4;

/// Extra qubits added around each coupling by the expanded domain recipe.
const EXPANDED_EXTRA: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    /// Each domain equals the support of its term.
    #[serde(rename = "A", alias = "a")]
    A,
    /// Coupling domains grow by two random neighbours of the coupled pair.
    #[serde(rename = "B", alias = "b")]
    B,
    /// Every domain is the whole register.
    #[serde(rename = "full")]
    Full,
    /// Supplied by the caller.
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::A => "A",
            DomainKind::B => "B",
            DomainKind::Full => "full",
            DomainKind::Custom => "custom",
        })
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(DomainKind::A),
            "B" | "b" => Ok(DomainKind::B),
            "full" | "Full" => Ok(DomainKind::Full),
            "custom" => Ok(DomainKind::Custom),
            _ => Err(Error::invalid(format!("unknown domain kind '{s}' (expected A, B or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    PauliSystem,
    ReducedDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QiteConfig {
    pub tau: f64,
    pub n_max: usize,
    pub domain_kind: DomainKind,
    pub regularization_lambda: f64,
    /// Seed for random domain draws.
    pub rng_seed: u64,
    pub record_every: usize,
    pub max_domain_qubits: usize,
    pub solver: SolverKind,
}

impl Default for QiteConfig {
    fn default() -> Self {
        QiteConfig {
            tau: 0.01,
            n_max: 100,
            domain_kind: DomainKind::A,
            regularization_lambda: DEFAULT_LAMBDA,
            rng_seed: 0,
            record_every: 10,
            max_domain_qubits: DEFAULT_MAX_DOMAIN,
            solver: SolverKind::ReducedDensity,
        }
    }
}

impl QiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        if !(self.regularization_lambda.is_finite() && self.regularization_lambda >= 0.0) {
            return Err(Error::invalid("regularization lambda must be finite and >= 0"));
        }
        if self.max_domain_qubits == 0 || self.max_domain_qubits > MAX_DOMAIN_QUBITS {
            return Err(Error::Resource {
                what: "domain cap",
                requested: self.max_domain_qubits,
                limit: MAX_DOMAIN_QUBITS,
            });
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        self.tau * self.n_max as f64
    }
}

/// Qubit domains aligned with [`DiagonalHamiltonian::term_decomposition`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSet {
    per_term: Vec<Vec<usize>>,
}

impl DomainSet {
    /// Domains equal to the term supports.
    pub fn build_domain_a(h: &DiagonalHamiltonian) -> Self {
        DomainSet {
            per_term: h.term_decomposition().iter().map(HamiltonianTerm::support).collect(),
        }
    }

    /// Term supports, with each coupling `(i, j)` grown by two vertices drawn
    /// uniformly from `(N(i) ∪ N(j)) \ {i, j}`. With fewer than two
    /// candidates all of them are taken.
    pub fn build_domain_b(h: &DiagonalHamiltonian, g: &UnitDiskGraph, rng_seed: u64) -> Result<Self> {
        check_graph_matches(h, g)?;
        let mut rng = seed::rng(rng_seed);
        let mut per_term = Vec::new();
        for term in h.term_decomposition() {
            let mut dom = term.support();
            if let [i, j] = dom[..] {
                let mut candidates: Vec<usize> = g.neighbors(i);
                candidates.extend(g.neighbors(j));
                candidates.sort_unstable();
                candidates.dedup();
                candidates.retain(|&v| v != i && v != j);
                dom.extend(candidates.choose_multiple(&mut rng, EXPANDED_EXTRA).copied());
                dom.sort_unstable();
            }
            per_term.push(dom);
        }
        Ok(DomainSet { per_term })
    }

    /// Every term acts on the whole register.
    pub fn full(h: &DiagonalHamiltonian) -> Self {
        let all: Vec<usize> = (0..h.n_qubits()).collect();
        DomainSet {
            per_term: vec![all; h.term_decomposition().len()],
        }
    }

    /// Caller-supplied domains; each is sorted and deduplicated.
    pub fn custom(per_term: Vec<Vec<usize>>) -> Self {
        DomainSet {
            per_term: per_term
                .into_iter()
                .map(|mut d| {
                    d.sort_unstable();
                    d.dedup();
                    d
                })
                .collect(),
        }
    }

    /// The published expanded-domain realization for the 6-vertex benchmark graph.
    pub fn paper_domain_b_6q() -> Self {
        let mut per_term: Vec<Vec<usize>> = (0..6).map(|q| vec![q]).collect();
        per_term.extend(
            [
                [0, 1, 3, 5],
                [0, 1, 2, 3],
                [0, 1, 4, 5],
                [1, 2, 4, 5],
                [0, 1, 3, 4],
                [1, 2, 4, 5],
                [0, 1, 3, 5],
                [0, 2, 3, 4],
                [2, 3, 4, 5],
                [0, 3, 4, 5],
                [1, 3, 4, 5],
                [0, 2, 4, 5],
            ]
            .iter()
            .map(|d| d.to_vec()),
        );
        DomainSet { per_term }
    }

    /// Builds the recipe named by `kind`; `Custom` is rejected here.
    pub fn for_kind(
        kind: DomainKind,
        h: &DiagonalHamiltonian,
        g: Option<&UnitDiskGraph>,
        rng_seed: u64,
    ) -> Result<Self> {
        match kind {
            DomainKind::A => Ok(Self::build_domain_a(h)),
            DomainKind::B => {
                let g = g.ok_or_else(|| Error::invalid("expanded domains need the graph"))?;
                Self::build_domain_b(h, g, rng_seed)
            }
            DomainKind::Full => Ok(Self::full(h)),
            DomainKind::Custom => Err(Error::invalid("custom domains must be supplied explicitly")),
        }
    }

    pub fn per_term(&self) -> &[Vec<usize>] {
        &self.per_term
    }

    pub fn len(&self) -> usize {
        self.per_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_term.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.per_term.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks alignment with `h`, support containment and the size cap.
    pub fn validate(&self, h: &DiagonalHamiltonian, cap: usize) -> Result<()> {
        let terms = h.term_decomposition();
        if terms.len() != self.per_term.len() {
            return Err(Error::SizeMismatch {
                expected: terms.len(),
                found: self.per_term.len(),
            });
        }
        for (l, (term, dom)) in terms.iter().zip(&self.per_term).enumerate() {
            if dom.len() > cap {
                return Err(Error::Resource {
                    what: "domain size",
                    requested: dom.len(),
                    limit: cap,
                });
            }
            if dom.iter().any(|&q| q >= h.n_qubits()) {
                return Err(Error::invalid(format!("domain {l} has a qubit outside the register")));
            }
            if !term.support().iter().all(|q| dom.contains(q)) {
                return Err(Error::invalid(format!(
                    "domain {l} {dom:?} does not contain the support of term {}",
                    term.label
                )));
            }
        }
        Ok(())
    }
}

fn check_graph_matches(h: &DiagonalHamiltonian, g: &UnitDiskGraph) -> Result<()> {
    if g.n_vertices() != h.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.n_qubits(),
            found: g.n_vertices(),
        });
    }
    let h_pairs: Vec<(usize, usize)> = h.quadratic().map(|(p, _)| p).collect();
    let g_pairs: Vec<(usize, usize)> = g.edges().collect();
    if h_pairs != g_pairs {
        return Err(Error::invalid("graph edges do not match the hamiltonian couplings"));
    }
    Ok(())
}

/// The linear system of one sub-step in the Pauli basis of its domain.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub basis: Vec<PauliString>,
    /// `S_IJ = <sigma_I sigma_J>`.
    pub s_matrix: CMatrix,
    /// `b_I = -2 Im <sigma_I h>`.
    pub b_vector: DVector<f64>,
}

impl LinearSystem {
    /// `Re(S + S^T)`.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let s = &self.s_matrix;
        DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| (s[(i, j)] + s[(j, i)]).re)
    }
}

/// Coefficients of `A` for one sub-step.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstepSolution {
    pub term_index: usize,
    pub coefficients: Vec<(PauliString, f64)>,
    /// `|| Re(S + S^T) a + b ||`.
    pub residual: f64,
}

impl SubstepSolution {
    pub fn operator_terms(&self) -> Vec<(f64, PauliString)> {
        self.coefficients.iter().map(|&(p, a)| (a, p)).collect()
    }
}

/// Assembles `S` and `b` for `term` on `domain` from exact expectation values.
pub fn substep_linear_system(state: &StateVector, term: &[PauliTerm], domain: &[usize]) -> Result<LinearSystem> {
    if domain.len() > MAX_BASIS_QUBITS {
        return Err(Error::Resource {
            what: "pauli-system domain size",
            requested: domain.len(),
            limit: MAX_BASIS_QUBITS,
        });
    }
    if let Some(t) = term.iter().find(|t| !t.string.is_supported_in(domain)) {
        return Err(Error::invalid(format!("term {} is not contained in domain {domain:?}", t.string)));
    }
    let basis = enumerate_basis(domain)?;
    let mut cache: HashMap<PauliString, Complex64> = HashMap::new();
    let mut expect = |p: PauliString| -> Result<Complex64> {
        if let Some(v) = cache.get(&p) {
            return Ok(*v);
        }
        let v = state.expect(&p)?;
        cache.insert(p, v);
        Ok(v)
    };
    let n = basis.len();
    let mut s = CMatrix::zeros(n, n);
    for (i, si) in basis.iter().enumerate() {
        for (j, sj) in basis.iter().enumerate() {
            let (phase, r) = si.mul(sj);
            s[(i, j)] = phase * expect(r)?;
        }
    }
    let mut b = DVector::zeros(n);
    for (i, si) in basis.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in term {
            let (phase, r) = si.mul(&t.string);
            acc += t.coefficient * phase * expect(r)?;
        }
        b[i] = -2.0 * acc.im;
    }
    Ok(LinearSystem {
        basis,
        s_matrix: s,
        b_vector: b,
    })
}

/// Regularized minimum-norm solve of `(Re(S + S^T) + lambda) a = -b`.
pub fn solve_substep(system: &LinearSystem, lambda: f64, term_index: usize) -> Result<SubstepSolution> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid("regularization lambda must be finite and >= 0"));
    }
    let m = system.normal_matrix();
    if m.iter().any(|v| !v.is_finite()) || system.b_vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entries in the sub-step system".into()));
    }
    let rhs = -&system.b_vector;
    let a = linalg::symmetric_solve(&m, &rhs, lambda);
    let residual = (&m * &a + &system.b_vector).norm();
    Ok(SubstepSolution {
        term_index,
        coefficients: system.basis.iter().copied().zip(a.iter().copied()).collect(),
        residual,
    })
}

/// `A` as a dense matrix on its domain, plus the residual of the normal equations.
#[derive(Debug, Clone)]
pub struct LocalUpdate {
    pub domain: Vec<usize>,
    pub operator: CMatrix,
    pub residual: f64,
}

impl LocalUpdate {
    /// Pauli coefficients `a_I = tr(sigma_I A) / 2^k`.
    pub fn to_solution(&self, term_index: usize) -> Result<SubstepSolution> {
        let k = self.domain.len();
        let dim = 1usize << k;
        let coefficients = enumerate_basis(&self.domain)?
            .into_iter()
            .map(|p| {
                let action = p.basis_action(&self.domain);
                // tr(P A) = sum_m <m|P A|m> = sum_m P[m, m^x] A[m^x, m]
                let mut tr = Complex64::new(0.0, 0.0);
                for col in 0..dim {
                    let (row, phase) = action.apply(col);
                    tr += phase * self.operator[(col, row)];
                }
                (p, tr.re / dim as f64)
            })
            .collect();
        Ok(SubstepSolution {
            term_index,
            coefficients,
            residual: self.residual,
        })
    }
}

/// Closed-form solve in the eigenbasis of the reduced density matrix.
pub fn reduced_density_update(
    state: &StateVector,
    term: &[PauliTerm],
    domain: &[usize],
    lambda: f64,
) -> Result<LocalUpdate> {
    let layout = DomainLayout::new(state.n_qubits(), domain)?;
    reduced_update_with_layout(state, term, &layout, lambda)
}

fn reduced_update_with_layout(
    state: &StateVector,
    term: &[PauliTerm],
    layout: &DomainLayout,
    lambda: f64,
) -> Result<LocalUpdate> {
    if let Some(t) = term.iter().find(|t| !t.string.is_supported_in(&layout.qubits)) {
        return Err(Error::invalid(format!(
            "term {} is not contained in domain {:?}",
            t.string, layout.qubits
        )));
    }
    let dim = layout.dim();
    let lam = lambda / dim as f64;
    let rho = state.reduced_density(layout);
    let h = local_operator(term, &layout.qubits);
    let (p, w) = linalg::hermitian_eigen(&rho)?;
    let h_eig = w.adjoint() * &h * &w;
    let mut a_eig = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let denom = p[i] + p[j] + lam;
            if i != j && denom > 1e-14 {
                a_eig[(i, j)] = Complex64::new(0.0, p[i] - p[j]) * h_eig[(i, j)] / denom;
            }
        }
    }
    let a = &w * a_eig * w.adjoint();
    let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);

    // Gradient of the unregularized objective, G = rho A + A rho - i[rho, h].
    let i = Complex64::new(0.0, 1.0);
    let g = &rho * &a + &a * &rho - (&rho * &h - &h * &rho) * i;
    let tr = g.trace();
    let res2 = dim as f64 * g.norm_squared() - tr.norm_sqr();
    Ok(LocalUpdate {
        domain: layout.qubits.clone(),
        operator: a,
        residual: res2.max(0.0).sqrt(),
    })
}

/// `|| normalize(exp(-tau h)|psi>) - exp(-i tau A)|psi> ||` for diagonal `h`.
pub fn substep_residual(
    state_before: &StateVector,
    term: &[PauliTerm],
    solution: &SubstepSolution,
    tau: f64,
) -> Result<f64> {
    let n = state_before.n_qubits();
    let mut energies = vec![0.0; state_before.dim()];
    for t in term {
        if t.string.x_mask() != 0 {
            return Err(Error::invalid("residual needs a diagonal term"));
        }
        if t.string.max_qubit().is_some_and(|q| q >= n) {
            return Err(Error::invalid("term acts outside the register"));
        }
        let all: Vec<usize> = (0..n).collect();
        let action = t.string.basis_action(&all);
        for (idx, e) in energies.iter_mut().enumerate() {
            *e += (t.coefficient * action.apply(idx).1).re;
        }
    }
    let exact = state_before.apply_imaginary_time(&energies, tau)?;
    let unitary = state_before.apply_pauli_rotation(&solution.operator_terms(), tau)?;
    exact.norm_distance(&unitary)
}

/// Outcome of one sub-step.
#[derive(Debug, Clone)]
pub struct SubstepOutcome {
    pub term_index: usize,
    pub update: LocalUpdate,
    pub norm_drift: f64,
}

/// Stateful driver applying sub-steps in decomposition order.
#[derive(Debug, Clone)]
pub struct QiteEngine {
    terms: Vec<HamiltonianTerm>,
    layouts: Vec<DomainLayout>,
    cfg: QiteConfig,
    state: StateVector,
    iteration: usize,
}

impl QiteEngine {
    pub fn new(h: &DiagonalHamiltonian, domains: &DomainSet, cfg: &QiteConfig) -> Result<Self> {
        cfg.validate()?;
        domains.validate(h, cfg.max_domain_qubits)?;
        if cfg.solver == SolverKind::PauliSystem && domains.max_size() > MAX_BASIS_QUBITS {
            return Err(Error::Resource {
                what: "pauli-system domain size",
                requested: domains.max_size(),
                limit: MAX_BASIS_QUBITS,
            });
        }
        let layouts = domains
            .per_term()
            .iter()
            .map(|d| DomainLayout::new(h.n_qubits(), d))
            .collect::<Result<Vec<_>>>()?;
        Ok(QiteEngine {
            terms: h.term_decomposition(),
            layouts,
            cfg: cfg.clone(),
            state: StateVector::plus_state(h.n_qubits())?,
            iteration: 0,
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn config(&self) -> &QiteConfig {
        &self.cfg
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, l: usize) -> &HamiltonianTerm {
        &self.terms[l]
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn time(&self) -> f64 {
        self.iteration as f64 * self.cfg.tau
    }

    /// Solves for and applies the unitary of term `l` on the current state.
    pub fn substep(&mut self, l: usize) -> Result<SubstepOutcome> {
        let term = &self.terms[l].terms;
        let layout = &self.layouts[l];
        let update = match self.cfg.solver {
            SolverKind::ReducedDensity => {
                reduced_update_with_layout(&self.state, term, layout, self.cfg.regularization_lambda)?
            }
            SolverKind::PauliSystem => {
                let system = substep_linear_system(&self.state, term, &layout.qubits)?;
                let sol = solve_substep(&system, self.cfg.regularization_lambda, l)?;
                let weighted = sol
                    .coefficients
                    .iter()
                    .map(|&(p, a)| PauliTerm::real(a, p))
                    .collect::<Result<Vec<_>>>()?;
                LocalUpdate {
                    domain: layout.qubits.clone(),
                    operator: local_operator(&weighted, &layout.qubits),
                    residual: sol.residual,
                }
            }
        };
        let u = linalg::unitary_exp(&update.operator, self.cfg.tau)?;
        self.state.apply_local_in_place(layout, &u);
        let norm_drift = self.state.renormalize()?;
        Ok(SubstepOutcome {
            term_index: l,
            update,
            norm_drift,
        })
    }

    /// Runs one full iteration over all terms.
    pub fn iterate(&mut self) -> Result<Vec<SubstepOutcome>> {
        let out = (0..self.terms.len()).map(|l| self.substep(l)).collect::<Result<Vec<_>>>()?;
        self.iteration += 1;
        Ok(out)
    }

    pub fn into_state(self) -> StateVector {
        self.state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub t: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstepRecord {
    pub iteration: usize,
    pub t: f64,
    pub term_index: usize,
    pub residual: f64,
    pub norm_drift: f64,
}

/// Snapshots and sub-step diagnostics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct QiteTrace {
    pub snapshots: Vec<Snapshot>,
    pub substeps: Vec<SubstepRecord>,
    pub max_norm_drift: f64,
    pub max_residual: f64,
}

impl QiteTrace {
    /// CSV with header `iteration,t,term_index,residual,norm_drift`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,t,term_index,residual,norm_drift")?;
        for r in &self.substeps {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iteration,
                crate::analysis::format_sig(r.t),
                r.term_index,
                crate::analysis::format_sig(r.residual),
                crate::analysis::format_sig(r.norm_drift)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QiteRun {
    pub final_state: StateVector,
    pub trace: QiteTrace,
}

/// Applies `n_max` iterations starting from the uniform superposition.
///
/// Snapshots are kept at iteration 0, every `record_every` iterations and at
/// the last one; sub-step diagnostics are kept for the same iterations.
pub fn qite_evolve(h: &DiagonalHamiltonian, domains: &DomainSet, cfg: &QiteConfig) -> Result<QiteRun> {
    let mut engine = QiteEngine::new(h, domains, cfg)?;
    let mut trace = QiteTrace {
        snapshots: vec![Snapshot {
            iteration: 0,
            t: 0.0,
            state: engine.state().clone(),
        }],
        substeps: Vec::new(),
        max_norm_drift: 0.0,
        max_residual: 0.0,
    };
    for j in 1..=cfg.n_max {
        let outcomes = engine.iterate()?;
        for o in &outcomes {
            trace.max_norm_drift = trace.max_norm_drift.max(o.norm_drift);
            trace.max_residual = trace.max_residual.max(o.update.residual);
        }
        if j % cfg.record_every == 0 || j == cfg.n_max {
            let t = engine.time();
            trace.substeps.extend(outcomes.iter().map(|o| SubstepRecord {
                iteration: j,
                t,
                term_index: o.term_index,
                residual: o.update.residual,
                norm_drift: o.norm_drift,
            }));
            trace.snapshots.push(Snapshot {
                iteration: j,
                t,
                state: engine.state().clone(),
            });
        }
    }
    Ok(QiteRun {
        final_state: engine.into_state(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::DEFAULT_U;
    use crate::ite::ite_state;
    use approx::assert_abs_diff_eq;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn z_term() -> Vec<PauliTerm> {
        vec![PauliTerm::real(1.0, p("Z0")).unwrap()]
    }

    fn paper_h() -> DiagonalHamiltonian {
        DiagonalHamiltonian::from_udmis(&UnitDiskGraph::paper_graph_6q(), DEFAULT_U).unwrap()
    }

    #[test]
    fn single_qubit_system_entries() {
        let plus = StateVector::plus_state(1).unwrap();
        let sys = substep_linear_system(&plus, &z_term(), &[0]).unwrap();
        assert_eq!(sys.basis, vec![p("X0"), p("Y0"), p("Z0")]);
        // b_Y = -2 Im <+|Y Z|+> = -2 Im(i <X>) = -2
        assert_abs_diff_eq!(sys.b_vector[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sys.b_vector[1], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sys.b_vector[2], 0.0, epsilon = 1e-14);
        let m = sys.normal_matrix();
        assert!((m - DMatrix::<f64>::identity(3, 3) * 2.0).norm() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                assert!((sys.s_matrix[(j, i)] - sys.s_matrix[(i, j)].conj()).norm() < 1e-14);
            }
        }
        let sol = solve_substep(&sys, 0.0, 0).unwrap();
        let a: Vec<f64> = sol.coefficients.iter().map(|c| c.1).collect();
        assert_abs_diff_eq!(a[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[2], 0.0, epsilon = 1e-12);
        assert!(sol.residual <= 1e-9);
    }

    #[test]
    fn eigenstate_gives_zero_b() {
        let one = StateVector::basis_state(2, 0b01).unwrap();
        let term = vec![PauliTerm::real(0.3, p("Z0*Z1")).unwrap()];
        let sys = substep_linear_system(&one, &term, &[0, 1]).unwrap();
        assert!(sys.b_vector.norm() < 1e-14);
        let sol = solve_substep(&sys, DEFAULT_LAMBDA, 0).unwrap();
        assert!(sol.coefficients.iter().all(|c| c.1.abs() < 1e-14));
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let sys = LinearSystem {
            basis: vec![p("X0"), p("Y0")],
            s_matrix: CMatrix::identity(2, 2),
            b_vector: DVector::zeros(2),
        };
        let sol = solve_substep(&sys, 1e-6, 0).unwrap();
        assert!(sol.coefficients.iter().all(|c| c.1 == 0.0));
    }

    #[test]
    fn rank_deficient_min_norm() {
        // Duplicated rows: a_X + a_Y = 1 (twice); min-norm a = (1/2, 1/2).
        let ones = Complex64::new(0.5, 0.0);
        let sys = LinearSystem {
            basis: vec![p("X0"), p("Y0")],
            s_matrix: CMatrix::from_element(2, 2, ones),
            b_vector: DVector::from_vec(vec![-1.0, -1.0]),
        };
        let sol = solve_substep(&sys, 0.0, 0).unwrap();
        assert_abs_diff_eq!(sol.coefficients[0].1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.coefficients[1].1, 0.5, epsilon = 1e-12);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn reduced_solver_matches_pauli_system() {
        // Entangled random-ish state on 4 qubits via a few rotations.
        let mut s = StateVector::plus_state(4).unwrap();
        for (c, ps, ang) in [(0.7, "X0*Y2", 0.4), (1.1, "Y1*Z3", 0.9), (0.3, "X1*X2*Y3", 1.3), (0.5, "Y0", 0.2)] {
            s = s.apply_pauli_rotation(&[(c, p(ps))], ang).unwrap();
        }
        let term = vec![PauliTerm::real(0.3375, p("Z1*Z2")).unwrap()];
        for lambda in [0.0, 1e-6, 1e-2] {
            for domain in [vec![1, 2], vec![0, 1, 2], vec![0, 1, 2, 3]] {
                let sys = substep_linear_system(&s, &term, &domain).unwrap();
                let explicit = solve_substep(&sys, lambda, 0).unwrap();
                let reduced = reduced_density_update(&s, &term, &domain, lambda).unwrap().to_solution(0).unwrap();
                for ((pa, a), (pb, b)) in explicit.coefficients.iter().zip(&reduced.coefficients) {
                    assert_eq!(pa, pb);
                    assert_abs_diff_eq!(a, b, epsilon = 1e-8);
                }
                assert_abs_diff_eq!(explicit.residual, reduced.residual, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn residual_single_qubit_third_order() {
        let plus = StateVector::plus_state(1).unwrap();
        let sys = substep_linear_system(&plus, &z_term(), &[0]).unwrap();
        let sol = solve_substep(&sys, 0.0, 0).unwrap();
        let r1 = substep_residual(&plus, &z_term(), &sol, 0.01).unwrap();
        let r2 = substep_residual(&plus, &z_term(), &sol, 0.005).unwrap();
        assert!(r1 <= 1e-3);
        // Rotation angle tau vs atan(tanh tau): the gap is (2/3) tau^3.
        assert_abs_diff_eq!(r1, 2.0 / 3.0 * 1e-6, epsilon = 1e-9);
        assert!((7.5..8.5).contains(&(r1 / r2)));
        assert!(substep_residual(&plus, &z_term(), &sol, 0.0).unwrap() < 1e-15);
    }

    #[test]
    fn residual_at_eigenstate_is_zero() {
        let zero = StateVector::basis_state(1, 0).unwrap();
        let sol = solve_substep(&substep_linear_system(&zero, &z_term(), &[0]).unwrap(), DEFAULT_LAMBDA, 0).unwrap();
        assert!(substep_residual(&zero, &z_term(), &sol, 0.01).unwrap() <= 1e-10);
    }

    #[test]
    fn domain_a_listing() {
        let d = DomainSet::build_domain_a(&paper_h());
        let expected: Vec<Vec<usize>> = vec![
            vec![0],
            vec![1],
            vec![2],
            vec![3],
            vec![4],
            vec![5],
            vec![0, 1],
            vec![0, 3],
            vec![0, 5],
            vec![1, 2],
            vec![1, 3],
            vec![1, 4],
            vec![1, 5],
            vec![2, 3],
            vec![2, 4],
            vec![3, 4],
            vec![3, 5],
            vec![4, 5],
        ];
        assert_eq!(d.per_term(), expected.as_slice());

        let edge = DiagonalHamiltonian::from_udmis(&UnitDiskGraph::from_edges(2, &[(0, 1)]).unwrap(), DEFAULT_U).unwrap();
        assert_eq!(DomainSet::build_domain_a(&edge).per_term(), &[vec![0], vec![1], vec![0, 1]]);
        let empty = DiagonalHamiltonian::from_udmis(&UnitDiskGraph::from_edges(3, &[]).unwrap(), DEFAULT_U).unwrap();
        assert!(DomainSet::build_domain_a(&empty).per_term().iter().all(|d| d.len() == 1));
    }

    #[test]
    fn domain_b_properties() {
        let g = UnitDiskGraph::paper_graph_6q();
        let h = paper_h();
        for s in 0..20 {
            let d = DomainSet::build_domain_b(&h, &g, s).unwrap();
            d.validate(&h, 4).unwrap();
            for (term, dom) in h.term_decomposition().iter().zip(d.per_term()).skip(6) {
                let (i, j) = match term.label {
                    crate::hamiltonian::TermLabel::Pair(i, j) => (i, j),
                    _ => unreachable!(),
                };
                assert_eq!(dom.len(), 4);
                assert!(dom.contains(&i) && dom.contains(&j));
                for &v in dom.iter().filter(|&&v| v != i && v != j) {
                    assert!(g.has_edge(v, i) || g.has_edge(v, j));
                }
            }
        }
        assert_eq!(
            DomainSet::build_domain_b(&h, &g, 3).unwrap(),
            DomainSet::build_domain_b(&h, &g, 3).unwrap()
        );
        // The published realization obeys the same rule.
        let paper = DomainSet::paper_domain_b_6q();
        paper.validate(&h, 4).unwrap();
        for (term, dom) in h.term_decomposition().iter().zip(paper.per_term()).skip(6) {
            let q = term.support();
            for &v in dom.iter().filter(|v| !q.contains(v)) {
                assert!(g.has_edge(v, q[0]) || g.has_edge(v, q[1]));
            }
        }
    }

    #[test]
    fn domain_b_fallbacks() {
        let g = UnitDiskGraph::from_edges(2, &[(0, 1)]).unwrap();
        let h = DiagonalHamiltonian::from_udmis(&g, DEFAULT_U).unwrap();
        assert_eq!(DomainSet::build_domain_b(&h, &g, 0).unwrap().per_term()[2], vec![0, 1]);

        let star = UnitDiskGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let h = DiagonalHamiltonian::from_udmis(&star, DEFAULT_U).unwrap();
        for s in 0..10 {
            let d = DomainSet::build_domain_b(&h, &star, s).unwrap();
            let dom = &d.per_term()[5];
            assert_eq!(dom.len(), 4);
            assert!(dom.iter().all(|v| [0, 1, 2, 3, 4].contains(v)));
        }
    }

    #[test]
    fn single_qubit_full_run_tracks_ite() {
        let h = DiagonalHamiltonian::new(1, 0.0, vec![1.0], &[]).unwrap();
        let cfg = QiteConfig {
            tau: 0.01,
            n_max: 1000,
            domain_kind: DomainKind::Full,
            ..QiteConfig::default()
        };
        let run = qite_evolve(&h, &DomainSet::full(&h), &cfg).unwrap();
        let f = run.final_state.fidelity(&ite_state(&h, 10.0).unwrap()).unwrap();
        assert!(f >= 0.9999, "fidelity {f}");
    }

    #[test]
    fn tiny_tau_barely_moves() {
        let h = paper_h();
        let cfg = QiteConfig {
            tau: 1e-7,
            n_max: 1,
            ..QiteConfig::default()
        };
        let run = qite_evolve(&h, &DomainSet::build_domain_a(&h), &cfg).unwrap();
        let d = run.final_state.norm_distance(&StateVector::plus_state(6).unwrap()).unwrap();
        assert!(d < 1e-5, "moved {d}");
    }

    #[test]
    fn trace_layout_and_determinism() {
        let h = paper_h();
        let cfg = QiteConfig {
            n_max: 25,
            record_every: 10,
            ..QiteConfig::default()
        };
        let d = DomainSet::build_domain_a(&h);
        let a = qite_evolve(&h, &d, &cfg).unwrap();
        let b = qite_evolve(&h, &d, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        let its: Vec<usize> = a.trace.snapshots.iter().map(|s| s.iteration).collect();
        assert_eq!(its, vec![0, 10, 20, 25]);
        assert_eq!(a.trace.substeps.len(), 3 * 18);
        assert!(a.trace.max_norm_drift < 1e-10);
        let mut csv = Vec::new();
        a.trace.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("iteration,t,term_index,residual,norm_drift\n"));
        assert_eq!(text.lines().count(), 1 + 54);
    }

    #[test]
    fn solvers_agree_on_a_short_run() {
        let h = paper_h();
        let d = DomainSet::paper_domain_b_6q();
        let base = QiteConfig {
            n_max: 3,
            ..QiteConfig::default()
        };
        let fast = qite_evolve(&h, &d, &base).unwrap();
        let slow = qite_evolve(
            &h,
            &d,
            &QiteConfig {
                solver: SolverKind::PauliSystem,
                ..base
            },
        )
        .unwrap();
        assert!(fast.final_state.norm_distance(&slow.final_state).unwrap() < 1e-9);
    }

    #[test]
    fn config_and_domain_validation() {
        let h = paper_h();
        assert!(QiteConfig { tau: 0.0, ..QiteConfig::default() }.validate().is_err());
        assert!(QiteConfig { n_max: 0, ..QiteConfig::default() }.validate().is_err());
        assert!(QiteConfig { record_every: 0, ..QiteConfig::default() }.validate().is_err());
        assert!(matches!(DomainSet::full(&h).validate(&h, 4), Err(Error::Resource { .. })));
        let bad = DomainSet::custom(vec![vec![0]; 18]);
        assert!(bad.validate(&h, 4).is_err());
        assert!(DomainSet::custom(vec![vec![0]; 3]).validate(&h, 4).is_err());
        assert_eq!("B".parse::<DomainKind>().unwrap(), DomainKind::B);
        assert!("C".parse::<DomainKind>().is_err());
    }
}
