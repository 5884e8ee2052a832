//! Experiment orchestration: single-instance characterizations and
//! random-graph campaigns, with CSV / JSON-lines / text outputs.
//!
//! Seeds in a campaign derive from the master seed: instance `k` draws its
//! graph from `g_k = mix_seed(master, k)`, expanded domains from
//! `mix_seed(g_k, 0)` and the shots of repetition `r` at shot count `M` from
//! `mix_seed(mix_seed(g_k, M), r)`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, format_sig, FailureSpec, TrajectoryRecord, BOUND_SLACK};
use crate::error::{Error, Result};
use crate::graph::UnitDiskGraph;
use crate::hamiltonian::{DiagonalHamiltonian, Spectrum, DEFAULT_U, LEVEL_TOLERANCE};
use crate::qite::{qite_evolve, DomainKind, DomainSet, QiteConfig};
use crate::sampler::{multi_shot_failure, solve_state};
use crate::seed::mix_seed;

/// Width of eigenvalue histogram bins.
pub const ENERGY_BIN_WIDTH: f64 = 0.05;

/// Width of relative-error histogram bins, in percentage points.
pub const RELERR_BIN_WIDTH: f64 = 2.5;

/// Default side of the square sampling box: `0.6 sqrt(N)`.
pub fn default_box_side(n: usize) -> f64 {
    0.6 * (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InstanceSource {
    /// The 6-vertex benchmark graph.
    Paper6,
    File {
        path: PathBuf,
    },
    Random {
        count: usize,
        n: usize,
        #[serde(default)]
        box_side: Option<f64>,
        #[serde(default)]
        master_seed: u64,
    },
}

/// A failure threshold; `shots_m` defaults to `2N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureConfig {
    pub delta_e: f64,
    #[serde(default)]
    pub shots_m: Option<usize>,
}

impl FailureConfig {
    fn resolve(&self, n: usize) -> Result<FailureSpec> {
        FailureSpec::new(self.delta_e, self.shots_m.unwrap_or(2 * n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub instance: InstanceSource,
    pub u: f64,
    pub qite: QiteConfig,
    /// Thresholds for characterizations; the first one names the plain trajectory files.
    pub failure: Vec<FailureConfig>,
    /// Domain recipes compared in a characterization.
    pub domains: Vec<DomainKind>,
    /// Shot counts for campaigns; empty means `{N, 2N}`.
    pub shots: Vec<usize>,
    /// Campaign tolerance; `None` uses each instance's spectral gap.
    pub delta_e: Option<f64>,
    /// Solves per instance and shot count.
    pub repetitions: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            output_dir: PathBuf::from("out"),
            instance: InstanceSource::Paper6,
            u: DEFAULT_U,
            qite: QiteConfig::default(),
            failure: vec![FailureConfig {
                delta_e: 0.0,
                shots_m: None,
            }],
            domains: vec![DomainKind::A],
            shots: Vec::new(),
            delta_e: None,
            repetitions: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.qite.validate()?;
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid experiment name '{}'", self.name)));
        }
        if !(self.u.is_finite() && self.u > 0.0) {
            return Err(Error::Config(format!("u must be positive, got {}", self.u)));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.shots.contains(&0) {
            return Err(Error::Config("shot counts must be at least 1".into()));
        }
        if self.delta_e.is_some_and(|d| d.is_nan() || d < 0.0) {
            return Err(Error::Config("delta_e must be >= 0".into()));
        }
        for f in &self.failure {
            if f.delta_e.is_nan() || f.delta_e < 0.0 || f.shots_m == Some(0) {
                return Err(Error::Config(format!("invalid failure threshold {f:?}")));
            }
        }
        if self.domains.contains(&DomainKind::Custom) {
            return Err(Error::Config("custom domains are not available from configuration".into()));
        }
        match &self.instance {
            InstanceSource::Random { count, n, box_side, .. } => {
                if *count == 0 || *n == 0 {
                    return Err(Error::Config("random campaigns need count >= 1 and n >= 1".into()));
                }
                if box_side.is_some_and(|b| !(b.is_finite() && b > 0.0)) {
                    return Err(Error::Config("box_side must be positive".into()));
                }
            }
            InstanceSource::File { path } if !path.exists() => {
                return Err(Error::Config(format!("graph file {} does not exist", path.display())));
            }
            _ => {}
        }
        Ok(())
    }

    /// `<output_dir>/<name>`.
    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }

    fn instance_count(&self) -> usize {
        match &self.instance {
            InstanceSource::Random { count, .. } => *count,
            _ => 1,
        }
    }

    /// Instance `k` and its derived seed.
    pub fn instance(&self, k: usize) -> Result<(UnitDiskGraph, u64)> {
        match &self.instance {
            InstanceSource::Paper6 => Ok((UnitDiskGraph::paper_graph_6q(), self.qite.rng_seed)),
            InstanceSource::File { path } => Ok((UnitDiskGraph::read_file(path)?, self.qite.rng_seed)),
            InstanceSource::Random {
                count,
                n,
                box_side,
                master_seed,
            } => {
                if k >= *count {
                    return Err(Error::invalid(format!("instance {k} out of range ({count})")));
                }
                let seed = mix_seed(*master_seed, k as u64);
                let side = box_side.unwrap_or_else(|| default_box_side(*n));
                Ok((UnitDiskGraph::random_unit_disk(*n, side, seed)?, seed))
            }
        }
    }
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Trajectory of one domain recipe at one threshold.
#[derive(Debug, Clone)]
pub struct DomainTrajectory {
    pub domain: DomainKind,
    pub spec: FailureSpec,
    pub records: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfmRow {
    /// `None` for the exact ITE state.
    pub domain: Option<DomainKind>,
    pub delta_e: f64,
    pub m: usize,
    pub pf_single: f64,
    pub pf_m: f64,
}

#[derive(Debug, Clone)]
pub struct CharacterizationReport {
    pub trajectories: Vec<DomainTrajectory>,
    pub pfm: Vec<PfmRow>,
    pub thm1_violations: usize,
    pub thm2_violations: usize,
    pub thm2_checked: usize,
    pub files: Vec<PathBuf>,
}

impl CharacterizationReport {
    pub fn bounds_text(&self) -> String {
        let mut out = String::new();
        for tr in &self.trajectories {
            let applicable = tr.records.iter().filter(|r| r.thm2_rhs.is_some()).count();
            let t1 = tr.records.iter().filter(|r| r.pf_ite > r.thm1_bound + BOUND_SLACK).count();
            let t2 = tr.records.iter().filter(|r| !r.thm2_holds()).count();
            let eps_max = tr.records.iter().map(|r| r.epsilon).fold(0.0, f64::max);
            out.push_str(&format!(
                "domain {} delta_E {}: {} snapshots, thm1 violations {}, thm2 applicable {} violations {}, max epsilon {}\n",
                tr.domain,
                format_sig(tr.spec.delta_e),
                tr.records.len(),
                t1,
                applicable,
                t2,
                format_sig(eps_max)
            ));
        }
        out.push_str(&format!(
            "total: thm1 violations {}, thm2 violations {} of {} applicable\n",
            self.thm1_violations, self.thm2_violations, self.thm2_checked
        ));
        out
    }
}

/// Trajectories, bound audits and `(P_F)^M` tables for a single instance.
pub fn run_characterization(cfg: &ExperimentConfig) -> Result<CharacterizationReport> {
    cfg.validate()?;
    if cfg.instance_count() != 1 {
        return Err(Error::Config("characterization needs a single instance".into()));
    }
    if cfg.failure.is_empty() || cfg.domains.is_empty() {
        return Err(Error::Config("characterization needs at least one threshold and one domain".into()));
    }
    let (g, instance_seed) = cfg.instance(0)?;
    let h = DiagonalHamiltonian::from_udmis(&g, cfg.u)?;
    let spectrum = h.spectrum()?;
    let n = g.n_vertices();
    let specs = cfg.failure.iter().map(|f| f.resolve(n)).collect::<Result<Vec<_>>>()?;

    let dir = cfg.experiment_dir();
    fs::create_dir_all(&dir)?;
    let mut report = CharacterizationReport {
        trajectories: Vec::new(),
        pfm: Vec::new(),
        thm1_violations: 0,
        thm2_violations: 0,
        thm2_checked: 0,
        files: Vec::new(),
    };

    for spec in &specs {
        let pf = analysis::failure_prob_ite_closed(&spectrum, cfg.qite.t_max(), spec.delta_e)?;
        push_pfm(&mut report.pfm, None, spec.delta_e, pf, 3 * n);
    }
    for &kind in &cfg.domains {
        let domains = DomainSet::for_kind(kind, &h, Some(&g), instance_seed)?;
        let run = qite_evolve(&h, &domains, &cfg.qite)?;
        for (k, spec) in specs.iter().enumerate() {
            let records = analysis::trajectory_metrics(&run.trace, &h, &cfg.qite, spec)?;
            let name = if k == 0 {
                format!("trajectory-{kind}.csv")
            } else {
                format!("trajectory-{kind}-dE{}.csv", format_sig(spec.delta_e))
            };
            let path = dir.join(name);
            analysis::write_trajectory_csv(&records, create_file(&path)?)?;
            report.files.push(path);

            report.thm1_violations += records.iter().filter(|r| r.pf_ite > r.thm1_bound + BOUND_SLACK).count();
            report.thm2_violations += records.iter().filter(|r| !r.thm2_holds()).count();
            report.thm2_checked += records.iter().filter(|r| r.thm2_rhs.is_some()).count();
            let pf = analysis::failure_prob(&run.final_state, &spectrum, spec.delta_e)?;
            push_pfm(&mut report.pfm, Some(kind), spec.delta_e, pf, 3 * n);
            report.trajectories.push(DomainTrajectory {
                domain: kind,
                spec: *spec,
                records,
            });
        }
    }

    let pfm_path = dir.join("pfm.csv");
    let mut w = create_file(&pfm_path)?;
    writeln!(w, "state,delta_e,M,pf_single,pf_m")?;
    for r in &report.pfm {
        let state = r.domain.map_or_else(|| "ite".to_string(), |d| d.to_string());
        writeln!(
            w,
            "{},{},{},{},{}",
            state,
            format_sig(r.delta_e),
            r.m,
            format_sig(r.pf_single),
            format_sig(r.pf_m)
        )?;
    }
    w.flush()?;
    report.files.push(pfm_path);

    let bounds_path = dir.join("bounds.txt");
    fs::write(&bounds_path, report.bounds_text())?;
    report.files.push(bounds_path);
    if report.thm1_violations + report.thm2_violations > 0 {
        log::error!(
            "bound violations: thm1 {}, thm2 {}",
            report.thm1_violations,
            report.thm2_violations
        );
    }
    Ok(report)
}

fn push_pfm(rows: &mut Vec<PfmRow>, domain: Option<DomainKind>, delta_e: f64, pf: f64, m_max: usize) {
    rows.extend((1..=m_max).map(|m| PfmRow {
        domain,
        delta_e,
        m,
        pf_single: pf,
        pf_m: multi_shot_failure(pf, m),
    }));
}

/// One solve inside a campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub instance: usize,
    pub n_edges: usize,
    pub shots: usize,
    pub seed: u64,
    pub best_energy: f64,
    pub best_bitstring: String,
    pub success: bool,
    pub ground_energy: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    pub shots: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub results: Vec<CampaignResult>,
    pub failed_instances: usize,
    pub eigenvalue_hist: Vec<HistBin>,
    pub relerr_hist: Vec<HistBin>,
}

impl CampaignSummary {
    /// Results for one shot count.
    pub fn for_shots(&self, m: usize) -> impl Iterator<Item = &CampaignResult> {
        self.results.iter().filter(move |r| r.shots == m)
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let jsonl = dir.join("results.jsonl");
        let mut w = create_file(&jsonl)?;
        for r in &self.results {
            writeln!(w, "{}", serde_json::to_string(r).expect("plain struct serializes"))?;
        }
        w.flush()?;
        let eig = dir.join("hist-eigenvalues.csv");
        write_hist(&eig, "energy", &self.eigenvalue_hist)?;
        let rel = dir.join("hist-relerr.csv");
        write_hist(&rel, "relerr", &self.relerr_hist)?;
        Ok(vec![jsonl, eig, rel])
    }
}

fn write_hist(path: &Path, what: &str, bins: &[HistBin]) -> Result<()> {
    let mut w = create_file(path)?;
    writeln!(w, "M,{what}_lo,{what}_hi,count,mass")?;
    for b in bins {
        writeln!(
            w,
            "{},{},{},{},{}",
            b.shots,
            format_sig(b.lo),
            format_sig(b.hi),
            b.count,
            format_sig(b.mass)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Normalized histogram per shot count; bins are `[k w, (k+1) w)`, empty bins omitted.
fn histogram(values: &[(usize, f64)], width: f64) -> Vec<HistBin> {
    let mut counts: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    let mut totals: BTreeMap<usize, usize> = BTreeMap::new();
    for &(m, v) in values {
        // Nudge so values sitting on a bin edge are not split by round-off.
        let k = ((v + 1e-9) / width).floor() as i64;
        *counts.entry((m, k)).or_default() += 1;
        *totals.entry(m).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((m, k), count)| HistBin {
            shots: m,
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
            mass: count as f64 / totals[&m] as f64,
        })
        .collect()
}

/// The spectral level an energy belongs to, so degenerate states compare exactly.
fn level_energy(spectrum: &Spectrum, e: f64) -> f64 {
    spectrum
        .levels()
        .iter()
        .find(|l| (l.energy - e).abs() <= LEVEL_TOLERANCE)
        .map_or(e, |l| l.energy)
}

fn run_instance(cfg: &ExperimentConfig, k: usize) -> Result<Vec<CampaignResult>> {
    let (g, gseed) = cfg.instance(k)?;
    let n = g.n_vertices();
    let h = DiagonalHamiltonian::from_udmis(&g, cfg.u)?;
    let spectrum = h.spectrum()?;
    let e0 = spectrum.ground_energy();
    let delta_e = cfg.delta_e.or_else(|| spectrum.gap()).unwrap_or(0.0);
    let domains = DomainSet::for_kind(cfg.qite.domain_kind, &h, Some(&g), mix_seed(gseed, 0))?;
    let state = qite_evolve(&h, &domains, &cfg.qite)?.final_state;
    let shots = if cfg.shots.is_empty() { vec![n, 2 * n] } else { cfg.shots.clone() };
    let mut out = Vec::new();
    for &m in &shots {
        let spec = FailureSpec::new(delta_e, m)?;
        for r in 0..cfg.repetitions {
            let seed = mix_seed(mix_seed(gseed, m as u64), r as u64);
            let res = solve_state(&state, &h, &spec, seed)?;
            out.push(CampaignResult {
                instance: k,
                n_edges: g.n_edges(),
                shots: m,
                seed,
                best_energy: res.best_energy,
                best_bitstring: res.best_bitstring.to_string(),
                success: res.succeeded,
                ground_energy: e0,
                relative_error: analysis::relative_error(e0, level_energy(&spectrum, res.best_energy))?,
            });
        }
    }
    Ok(out)
}

/// Solves every instance of the campaign and aggregates histograms.
///
/// `jobs` bounds instance-level parallelism (`None`: all cores); results do
/// not depend on it.
pub fn run_campaign(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<CampaignSummary> {
    cfg.validate()?;
    let count = cfg.instance_count();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let per_instance: Vec<Result<Vec<CampaignResult>>> =
        pool.install(|| (0..count).into_par_iter().map(|k| run_instance(cfg, k)).collect());

    let mut results = Vec::new();
    let mut failed = 0;
    for (k, r) in per_instance.into_iter().enumerate() {
        match r {
            Ok(rs) => results.extend(rs),
            Err(e) => {
                log::warn!("instance {k} skipped: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        log::warn!("{failed} of {count} instances failed");
    }
    let energies: Vec<(usize, f64)> = results.iter().map(|r| (r.shots, r.best_energy)).collect();
    let relerrs: Vec<(usize, f64)> = results.iter().map(|r| (r.shots, r.relative_error)).collect();
    Ok(CampaignSummary {
        eigenvalue_hist: histogram(&energies, ENERGY_BIN_WIDTH),
        relerr_hist: histogram(&relerrs, RELERR_BIN_WIDTH),
        results,
        failed_instances: failed,
    })
}
