//! Failure probabilities, trajectory diagnostics and the numeric bound checks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{DiagonalHamiltonian, Spectrum};
use crate::ite::ite_state;
use crate::qite::{QiteConfig, QiteTrace};
use crate::state::StateVector;

/// Slack applied when comparing probability differences against bounds.
pub const BOUND_SLACK: f64 = 1e-12;

/// What counts as a successful measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureSpec {
    /// Energies up to `E0 + delta_e` are acceptable.
    pub delta_e: f64,
    /// Number of shots.
    pub shots_m: usize,
}

impl FailureSpec {
    pub fn new(delta_e: f64, shots_m: usize) -> Result<Self> {
        if delta_e.is_nan() || delta_e < 0.0 {
            return Err(Error::invalid(format!("delta_E must be >= 0, got {delta_e}")));
        }
        if shots_m == 0 {
            return Err(Error::invalid("shot count must be at least 1"));
        }
        Ok(FailureSpec { delta_e, shots_m })
    }
}

/// Diagnostics for one snapshot of a QITE run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// `|| psi_ite(t) - phi_qite(t) ||`, no phase alignment.
    pub epsilon: f64,
    /// `|| psi_ite(t_max) - phi_qite(t) ||`.
    pub epsilon_bar: f64,
    /// `sqrt(2 - 2 |<psi_ite(t)|phi_qite(t)>|)`.
    pub epsilon_aligned: f64,
    pub fidelity_ite: f64,
    pub fidelity_final: f64,
    pub pf_ite: f64,
    pub pf_qite: f64,
    pub thm1_bound: f64,
    /// `None` when `epsilon > sqrt 2` and the inequality does not apply.
    pub thm2_rhs: Option<f64>,
}

impl TrajectoryRecord {
    pub const CSV_HEADER: &'static str =
        "t,epsilon,epsilon_bar,fidelity_ite,fidelity_final,pf_ite,pf_qite,thm1_bound,thm2_rhs";

    pub fn thm2_holds(&self) -> bool {
        thm2_check(self.epsilon, self.pf_qite, self.pf_ite).holds
    }

    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.epsilon,
            self.epsilon_bar,
            self.fidelity_ite,
            self.fidelity_final,
            self.pf_ite,
            self.pf_qite,
            self.thm1_bound,
            self.thm2_rhs.unwrap_or(f64::NAN),
        ]
        .iter()
        .map(|&v| format_sig(v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn write_trajectory_csv<W: Write>(records: &[TrajectoryRecord], mut w: W) -> Result<()> {
    writeln!(w, "{}", TrajectoryRecord::CSV_HEADER)?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Formats with 12 significant digits, `%g` style.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn check_size(state: &StateVector, spectrum: &Spectrum) -> Result<()> {
    if state.n_qubits() != spectrum.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: spectrum.n_qubits(),
            found: state.n_qubits(),
        });
    }
    Ok(())
}

/// Probability mass on basis states with energy above `E0 + delta_e`.
pub fn failure_prob(state: &StateVector, spectrum: &Spectrum, delta_e: f64) -> Result<f64> {
    check_size(state, spectrum)?;
    let mut pf = 0.0;
    for level in spectrum.levels() {
        if spectrum.is_failing(level.energy, delta_e) {
            pf += level.states.iter().map(|&i| state.amplitudes()[i].norm_sqr()).sum::<f64>();
        }
    }
    Ok(pf)
}

/// Failure probability of the exact ITE state at time `t`, from the spectrum alone.
pub fn failure_prob_ite_closed(spectrum: &Spectrum, t: f64, delta_e: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be finite and >= 0, got {t}")));
    }
    let e0 = spectrum.ground_energy();
    let (mut fail, mut total) = (0.0, 0.0);
    for level in spectrum.levels() {
        // Weights relative to the ground level, so the total is at least 1.
        let w = level.degeneracy as f64 * (-2.0 * t * (level.energy - e0)).exp();
        total += w;
        if spectrum.is_failing(level.energy, delta_e) {
            fail += w;
        }
    }
    Ok(fail / total)
}

/// Upper bound `1 / (1 + g/(d-g) e^{2 t delta_e})` on the ITE failure probability.
pub fn thm1_bound(t: f64, delta_e: f64, g: usize, d: usize) -> Result<f64> {
    if g == 0 || g >= d {
        return Err(Error::invalid(format!("need 1 <= g < d, got g={g}, d={d}")));
    }
    if !(t >= 0.0 && delta_e >= 0.0) {
        return Err(Error::invalid("t and delta_E must be >= 0"));
    }
    let ratio = g as f64 / (d - g) as f64;
    Ok(1.0 / (1.0 + ratio * (2.0 * t * delta_e).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm2Check {
    pub holds: bool,
    /// `None` when `eps > sqrt 2`.
    pub rhs: Option<f64>,
}

/// Checks `|pf_qite - pf_ite| <= eps sqrt(1 - eps^2/4)`; vacuous for `eps > sqrt 2`.
pub fn thm2_check(eps: f64, pf_qite: f64, pf_ite: f64) -> Thm2Check {
    if eps > std::f64::consts::SQRT_2 {
        return Thm2Check { holds: true, rhs: None };
    }
    let rhs = eps * (1.0 - eps * eps / 4.0).max(0.0).sqrt();
    Thm2Check {
        holds: (pf_qite - pf_ite).abs() <= rhs + BOUND_SLACK,
        rhs: Some(rhs),
    }
}

/// Largest angle between two unit vectors at distance `eps`.
pub fn lemma1_theta_max(eps: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::SQRT_2).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, sqrt 2], got {eps}")));
    }
    Ok(2.0 * (eps / 2.0).asin())
}

/// Percentage `100 |E0 - Ei| / |E0|`.
pub fn relative_error(e0: f64, ei: f64) -> Result<f64> {
    if e0 == 0.0 {
        return Err(Error::invalid("relative error undefined for E0 = 0"));
    }
    Ok(100.0 * (e0 - ei).abs() / e0.abs())
}

/// Diagnostics for every snapshot of `trace`.
pub fn trajectory_metrics(
    trace: &QiteTrace,
    h: &DiagonalHamiltonian,
    cfg: &QiteConfig,
    spec: &FailureSpec,
) -> Result<Vec<TrajectoryRecord>> {
    let spectrum = h.spectrum()?;
    let psi_final = ite_state(h, cfg.t_max())?;
    let (g, d) = (spectrum.ground_degeneracy(), spectrum.dim());
    trace
        .snapshots
        .iter()
        .map(|snap| {
            let psi = ite_state(h, snap.t)?;
            let phi = &snap.state;
            let epsilon = psi.norm_distance(phi)?;
            let overlap = psi.inner(phi)?.norm();
            let pf_ite = failure_prob_ite_closed(&spectrum, snap.t, spec.delta_e)?;
            let pf_qite = failure_prob(phi, &spectrum, spec.delta_e)?;
            // A constant Hamiltonian has no failing states at all.
            let thm1 = if g < d { thm1_bound(snap.t, spec.delta_e, g, d)? } else { 0.0 };
            Ok(TrajectoryRecord {
                t: snap.t,
                epsilon,
                epsilon_bar: psi_final.norm_distance(phi)?,
                epsilon_aligned: (2.0 - 2.0 * overlap).max(0.0).sqrt(),
                fidelity_ite: overlap * overlap,
                fidelity_final: psi_final.fidelity(phi)?,
                pf_ite,
                pf_qite,
                thm1_bound: thm1,
                thm2_rhs: thm2_check(epsilon, pf_qite, pf_ite).rhs,
            })
        })
        .collect()
}

/// Times at which the first bound is audited.
pub const THM1_AUDIT_TIMES: [f64; 5] = [0.0, 0.1, 1.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuditSummary {
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen (negative when every check has room).
    pub max_excess: f64,
}

impl AuditSummary {
    fn record(&mut self, lhs: f64, rhs: f64) {
        let excess = lhs - rhs;
        if self.checked == 0 || excess > self.max_excess {
            self.max_excess = excess;
        }
        self.checked += 1;
        if excess > BOUND_SLACK {
            self.violations += 1;
        }
    }
}

/// Random diagonal Hamiltonian on `1..=max_n` qubits with every coefficient
/// (constant, fields, all pair couplings) uniform in `[-1, 1]`.
pub fn random_diagonal_hamiltonian(max_n: usize, rng_seed: u64) -> Result<DiagonalHamiltonian> {
    use rand::Rng;
    if max_n == 0 {
        return Err(Error::invalid("max_n must be at least 1"));
    }
    let mut rng = crate::seed::rng(rng_seed);
    let n = rng.random_range(1..=max_n);
    let mut coef = || rng.random_range(-1.0..=1.0);
    let a = coef();
    let b: Vec<f64> = (0..n).map(|_| coef()).collect();
    let mut quad = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            quad.push(((i, j), coef()));
        }
    }
    DiagonalHamiltonian::new(n, a, b, &quad)
}

/// Checks the ITE failure bound on `count` random Hamiltonians, at every time
/// in [`THM1_AUDIT_TIMES`] and `delta_E` in `{0, gap/2, gap}`. Hamiltonians
/// with a single level are skipped.
pub fn audit_thm1_random(count: usize, max_n: usize, master_seed: u64) -> Result<AuditSummary> {
    let mut audit = AuditSummary::default();
    for k in 0..count {
        let h = random_diagonal_hamiltonian(max_n, crate::seed::mix_seed(master_seed, k as u64))?;
        let spectrum = h.spectrum()?;
        let Some(gap) = spectrum.gap() else { continue };
        let (g, d) = (spectrum.ground_degeneracy(), spectrum.dim());
        for delta_e in [0.0, gap / 2.0, gap] {
            for t in THM1_AUDIT_TIMES {
                audit.record(
                    failure_prob_ite_closed(&spectrum, t, delta_e)?,
                    thm1_bound(t, delta_e, g, d)?,
                );
            }
        }
    }
    Ok(audit)
}

/// Checks the QITE/ITE failure-probability bound on every applicable record.
pub fn audit_thm2(records: &[TrajectoryRecord]) -> AuditSummary {
    let mut audit = AuditSummary::default();
    for r in records {
        if let Some(rhs) = r.thm2_rhs {
            audit.record((r.pf_qite - r.pf_ite).abs(), rhs);
        }
    }
    audit
}
