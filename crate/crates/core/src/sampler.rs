//! Computational-basis measurement and the shot-based solve procedure.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::FailureSpec;
use crate::error::{Error, Result};
use crate::graph::Bitstring;
use crate::hamiltonian::{DiagonalHamiltonian, Spectrum};
use crate::qite::{qite_evolve, DomainSet, QiteConfig};
use crate::seed;
use crate::state::StateVector;

/// Outcome of measuring `M` shots and keeping the lowest energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_bitstring: Bitstring,
    pub best_energy: f64,
    pub all_shot_energies: Vec<f64>,
    pub succeeded: bool,
    pub rng_seed: u64,
}

#[derive(Serialize)]
struct SolveLine<'a> {
    seed: u64,
    best_energy: f64,
    best_bitstring: String,
    success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    shot_energies: Option<&'a [f64]>,
}

impl SolveResult {
    /// One JSON object with `seed`, `best_energy`, `best_bitstring`, `success`.
    pub fn to_json_line(&self) -> String {
        self.json(false)
    }

    /// As [`to_json_line`](Self::to_json_line) plus `shot_energies`.
    pub fn to_json_detailed(&self) -> String {
        self.json(true)
    }

    fn json(&self, detailed: bool) -> String {
        serde_json::to_string(&SolveLine {
            seed: self.rng_seed,
            best_energy: self.best_energy,
            best_bitstring: self.best_bitstring.to_string(),
            success: self.succeeded,
            shot_energies: detailed.then_some(self.all_shot_energies.as_slice()),
        })
        .expect("plain struct serializes")
    }
}

/// Inverse-CDF sampler over `|amplitude|^2`.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    cumulative: Vec<f64>,
    last_supported: usize,
}

impl ShotSampler {
    pub fn new(state: &StateVector) -> Self {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = state
            .probabilities()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let probs = state.probabilities();
        let last_supported = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        ShotSampler {
            cumulative,
            last_supported,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty state");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.last_supported)
    }

    pub fn sample_many(&self, m: usize, rng_seed: u64) -> Vec<usize> {
        let mut rng = seed::rng(rng_seed);
        (0..m).map(|_| self.sample(&mut rng)).collect()
    }
}

/// `M` i.i.d. computational-basis outcomes.
pub fn measure_shots(state: &StateVector, m: usize, rng_seed: u64) -> Result<Vec<Bitstring>> {
    if m == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    let n = state.n_qubits();
    Ok(ShotSampler::new(state)
        .sample_many(m, rng_seed)
        .into_iter()
        .map(|i| Bitstring::from_index(i, n))
        .collect())
}

/// Normalized outcome histogram over all `dim` basis states.
pub fn empirical_distribution(outcomes: &[usize], dim: usize) -> Vec<f64> {
    let mut counts = vec![0.0; dim];
    for &i in outcomes {
        counts[i] += 1.0;
    }
    let total = outcomes.len().max(1) as f64;
    counts.iter_mut().for_each(|c| *c /= total);
    counts
}

/// Total variation distance `1/2 sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Lowest-energy shot, first occurrence on ties.
fn best_of_shots(
    sampler: &ShotSampler,
    h: &DiagonalHamiltonian,
    spectrum: &Spectrum,
    spec: &FailureSpec,
    shot_seed: u64,
) -> SolveResult {
    let n = h.n_qubits();
    let shots = sampler.sample_many(spec.shots_m, shot_seed);
    let energies: Vec<f64> = shots.iter().map(|&i| h.energy_of_index(i)).collect();
    let mut best = 0;
    for (k, e) in energies.iter().enumerate() {
        if *e < energies[best] {
            best = k;
        }
    }
    let best_energy = energies[best];
    SolveResult {
        best_bitstring: Bitstring::from_index(shots[best], n),
        best_energy,
        all_shot_energies: energies,
        succeeded: !spectrum.is_failing(best_energy, spec.delta_e),
        rng_seed: shot_seed,
    }
}

/// Measures an already evolved state.
pub fn solve_state(
    state: &StateVector,
    h: &DiagonalHamiltonian,
    spec: &FailureSpec,
    shot_seed: u64,
) -> Result<SolveResult> {
    if state.n_qubits() != h.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.n_qubits(),
            found: state.n_qubits(),
        });
    }
    let spectrum = h.spectrum()?;
    Ok(best_of_shots(&ShotSampler::new(state), h, &spectrum, spec, shot_seed))
}

/// Evolves with QITE, measures `spec.shots_m` shots and keeps the lowest energy.
pub fn solve(
    h: &DiagonalHamiltonian,
    domains: &DomainSet,
    cfg: &QiteConfig,
    spec: &FailureSpec,
    shot_seed: u64,
) -> Result<SolveResult> {
    let run = qite_evolve(h, domains, cfg)?;
    solve_state(&run.final_state, h, spec, shot_seed)
}

/// Repeated solves of one evolved state; repetition `k` uses `mix_seed(master_seed, k)`.
pub fn repeated_solves(
    state: &StateVector,
    h: &DiagonalHamiltonian,
    spec: &FailureSpec,
    repetitions: usize,
    master_seed: u64,
) -> Result<Vec<SolveResult>> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    let spectrum = h.spectrum()?;
    let sampler = ShotSampler::new(state);
    Ok((0..repetitions as u64)
        .into_par_iter()
        .map(|k| best_of_shots(&sampler, h, &spectrum, spec, seed::mix_seed(master_seed, k)))
        .collect())
}

/// Fraction of repeated solves whose best energy is unacceptable. The
/// evolution runs once; only the measurement seeds vary.
pub fn failure_rate_empirical(
    h: &DiagonalHamiltonian,
    domains: &DomainSet,
    cfg: &QiteConfig,
    spec: &FailureSpec,
    repetitions: usize,
    master_seed: u64,
) -> Result<f64> {
    let run = qite_evolve(h, domains, cfg)?;
    let results = repeated_solves(&run.final_state, h, spec, repetitions, master_seed)?;
    Ok(results.iter().filter(|r| !r.succeeded).count() as f64 / repetitions as f64)
}

/// Exact `M`-shot failure probability from the single-shot one.
pub fn multi_shot_failure(pf: f64, m: usize) -> f64 {
    pf.powi(m as i32)
}
