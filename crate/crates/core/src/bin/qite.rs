//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.
//! Results go to stdout, logs to stderr. Flags override config-file values.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use qite_core::analysis::{self, format_sig, FailureSpec};
use qite_core::graph::UnitDiskGraph;
use qite_core::hamiltonian::{DiagonalHamiltonian, DEFAULT_U};
use qite_core::qite::{qite_evolve, DomainKind, DomainSet, QiteConfig, SolverKind};
use qite_core::runner::{self, default_box_side, ExperimentConfig, FailureConfig, InstanceSource};
use qite_core::sampler::solve_state;
use qite_core::state::MAX_DOMAIN_QUBITS;
use qite_core::Error;

#[derive(Parser)]
#[command(name = "qite", version, about = "Quantum imaginary time evolution for unit-disk MIS")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads for instance-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random unit-disk graph (or the 6-vertex benchmark) in text format.
    Generate(GenerateArgs),
    /// Evolve, measure M shots and print the best outcome as JSON.
    Solve(SolveArgs),
    /// Trajectories, bound report and (P_F)^M tables for one instance.
    Characterize(CharacterizeArgs),
    /// Solve a batch of random instances and write histograms.
    Campaign(CampaignArgs),
    /// Exhaustive maximum independent set.
    Bruteforce(GraphArg),
    /// Lowest energy levels with degeneracies.
    Spectrum(SpectrumArgs),
    /// Numeric audit of the failure-probability bounds.
    Audit(AuditArgs),
}

#[derive(Args)]
struct GraphArg {
    /// Graph file (`n=`, `v i x y`, `e i j` lines).
    graph: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of vertices.
    #[arg(short, required_unless_present = "paper6")]
    n: Option<usize>,
    /// Side of the square sampling box (default 0.6 sqrt(n)).
    #[arg(long = "box")]
    box_side: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the 6-vertex, 12-edge benchmark graph instead.
    #[arg(long, conflicts_with_all = ["n", "box_side"])]
    paper6: bool,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct QiteFlags {
    /// Imaginary time step.
    #[arg(long)]
    tau: Option<f64>,
    /// Number of iterations.
    #[arg(long)]
    n_max: Option<usize>,
    /// Domain recipe: A (term support), B (support plus two neighbours) or full.
    #[arg(long)]
    domain: Option<DomainKind>,
    /// Largest allowed domain (raised to N for `--domain full`).
    #[arg(long)]
    max_domain: Option<usize>,
    /// Tikhonov weight of the sub-step least-squares problem.
    #[arg(long)]
    lambda: Option<f64>,
    /// Sub-step solver.
    #[arg(long, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    /// Snapshot period in iterations.
    #[arg(long)]
    record_every: Option<usize>,
}

impl QiteFlags {
    fn apply(&self, cfg: &mut QiteConfig) {
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.domain {
            cfg.domain_kind = v;
        }
        if let Some(v) = self.max_domain {
            cfg.max_domain_qubits = v;
        }
        if let Some(v) = self.lambda {
            cfg.regularization_lambda = v;
        }
        if let Some(v) = self.solver {
            cfg.solver = v;
        }
        if let Some(v) = self.record_every {
            cfg.record_every = v;
        }
    }
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "pauli-system" => Ok(SolverKind::PauliSystem),
        "reduced-density" => Ok(SolverKind::ReducedDensity),
        _ => Err(format!("unknown solver '{s}' (pauli-system or reduced-density)")),
    }
}

#[derive(Args)]
struct SolveArgs {
    graph: PathBuf,
    /// Edge penalty.
    #[arg(short, default_value_t = DEFAULT_U)]
    u: f64,
    #[command(flatten)]
    qite: QiteFlags,
    /// Number of shots (default 2N).
    #[arg(short = 'M', long)]
    shots: Option<usize>,
    /// Acceptable energy above the ground level (default: spectral gap).
    #[arg(long)]
    delta_e: Option<f64>,
    /// Seed for measurements and random domains.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include every shot energy in the output.
    #[arg(long)]
    detailed: bool,
}

#[derive(Args)]
struct CharacterizeArgs {
    /// Graph file; the benchmark graph is used when neither this nor a config names one.
    graph: Option<PathBuf>,
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short)]
    u: Option<f64>,
    #[command(flatten)]
    qite: QiteFlags,
    /// Domain recipes to compare, comma separated.
    #[arg(long, value_delimiter = ',')]
    domains: Vec<DomainKind>,
    /// Tolerances, comma separated.
    #[arg(long, value_delimiter = ',')]
    delta_e: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct CampaignArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of random instances.
    #[arg(long)]
    count: Option<usize>,
    /// Vertices per instance.
    #[arg(short)]
    n: Option<usize>,
    #[arg(long = "box")]
    box_side: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short)]
    u: Option<f64>,
    #[command(flatten)]
    qite: QiteFlags,
    /// Shot counts, comma separated (default N,2N).
    #[arg(short = 'M', long, value_delimiter = ',')]
    shots: Vec<usize>,
    /// Fixed tolerance (default: each instance's gap).
    #[arg(long)]
    delta_e: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct SpectrumArgs {
    graph: PathBuf,
    #[arg(short, default_value_t = DEFAULT_U)]
    u: f64,
    /// Number of levels to print.
    #[arg(long, default_value_t = 2)]
    levels: usize,
}

#[derive(Args)]
struct AuditArgs {
    /// Graph for the trajectory audit (default: benchmark graph).
    graph: Option<PathBuf>,
    /// Random Hamiltonians for the ITE bound audit.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Largest random Hamiltonian size.
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, default_value_t = DEFAULT_U)]
    u: f64,
    #[command(flatten)]
    qite: QiteFlags,
    /// Domain recipes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "A,B")]
    domains: Vec<DomainKind>,
    /// Tolerances, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.35")]
    delta_e: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 1,
        Error::Io(io) => match io.kind() {
            io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied | io::ErrorKind::InvalidInput => 2,
            _ => 1,
        },
        _ => 2,
    }
}

fn run(cli: Cli) -> qite_core::Result<ExitCode> {
    let jobs = cli.jobs;
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Characterize(a) => cmd_characterize(a),
        Command::Campaign(a) => cmd_campaign(a, jobs),
        Command::Bruteforce(a) => cmd_bruteforce(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Audit(a) => cmd_audit(a),
    }
}

fn out_line(s: &str) -> qite_core::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{s}")?;
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> qite_core::Result<ExitCode> {
    let g = if a.paper6 {
        UnitDiskGraph::paper_graph_6q()
    } else {
        let n = a.n.unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        UnitDiskGraph::random_unit_disk(n, a.box_side.unwrap_or_else(|| default_box_side(n)), a.seed)?
    };
    match a.out {
        Some(path) => {
            g.write_file(&path)?;
            info!("wrote {} ({} vertices, {} edges)", path.display(), g.n_vertices(), g.n_edges());
        }
        None => io::stdout().lock().write_all(g.to_text().as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

/// Full domains need a cap of at least N.
fn fit_full_domain(cfg: &mut QiteConfig, n: usize) {
    if cfg.domain_kind == DomainKind::Full && cfg.max_domain_qubits < n {
        cfg.max_domain_qubits = n.min(MAX_DOMAIN_QUBITS);
    }
}

fn cmd_solve(a: SolveArgs) -> qite_core::Result<ExitCode> {
    let g = UnitDiskGraph::read_file(&a.graph)?;
    let h = DiagonalHamiltonian::from_udmis(&g, a.u)?;
    let n = g.n_vertices();
    let mut cfg = QiteConfig {
        rng_seed: a.seed,
        ..QiteConfig::default()
    };
    a.qite.apply(&mut cfg);
    fit_full_domain(&mut cfg, n);
    let domains = DomainSet::for_kind(cfg.domain_kind, &h, Some(&g), cfg.rng_seed)?;
    let spectrum = h.spectrum()?;
    let delta_e = a.delta_e.or_else(|| spectrum.gap()).unwrap_or(0.0);
    let spec = FailureSpec::new(delta_e, a.shots.unwrap_or(2 * n))?;
    let run = qite_evolve(&h, &domains, &cfg)?;
    info!("evolved to t = {} (max norm drift {:e})", cfg.t_max(), run.trace.max_norm_drift);
    let res = solve_state(&run.final_state, &h, &spec, a.seed)?;
    out_line(&if a.detailed { res.to_json_detailed() } else { res.to_json_line() })?;
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Option<PathBuf>) -> qite_core::Result<ExperimentConfig> {
    match path {
        Some(p) => {
            if !p.exists() {
                return Err(Error::Io(io::Error::new(
                    io::ErrorKind::NotFound,
                    format!("config file {} not found", p.display()),
                )));
            }
            ExperimentConfig::from_file(p)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn cmd_characterize(a: CharacterizeArgs) -> qite_core::Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if let Some(g) = a.graph {
        if !g.exists() {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("graph file {} not found", g.display()),
            )));
        }
        cfg.instance = InstanceSource::File { path: g };
    }
    if let Some(u) = a.u {
        cfg.u = u;
    }
    if let Some(s) = a.seed {
        cfg.qite.rng_seed = s;
    }
    a.qite.apply(&mut cfg.qite);
    if !a.domains.is_empty() {
        cfg.domains = a.domains;
    }
    if !a.delta_e.is_empty() {
        cfg.failure = a
            .delta_e
            .iter()
            .map(|&d| FailureConfig {
                delta_e: d,
                shots_m: None,
            })
            .collect();
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(n) = a.name {
        cfg.name = n;
    }
    if cfg.domains.contains(&DomainKind::Full) {
        let n = cfg.instance(0)?.0.n_vertices();
        cfg.qite.max_domain_qubits = cfg.qite.max_domain_qubits.max(n.min(MAX_DOMAIN_QUBITS));
    }
    let report = runner::run_characterization(&cfg)?;
    print!("{}", report.bounds_text());
    for f in &report.files {
        info!("wrote {}", f.display());
    }
    Ok(if report.thm1_violations + report.thm2_violations > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_campaign(a: CampaignArgs, jobs: Option<usize>) -> qite_core::Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if a.count.is_some() || a.n.is_some() || a.box_side.is_some() || a.seed.is_some() {
        let (mut count, mut n, mut box_side, mut master_seed) = match cfg.instance {
            InstanceSource::Random {
                count,
                n,
                box_side,
                master_seed,
            } => (count, n, box_side, master_seed),
            _ => (100, 6, None, 0),
        };
        count = a.count.unwrap_or(count);
        n = a.n.unwrap_or(n);
        box_side = a.box_side.or(box_side);
        master_seed = a.seed.unwrap_or(master_seed);
        cfg.instance = InstanceSource::Random {
            count,
            n,
            box_side,
            master_seed,
        };
    }
    if let Some(u) = a.u {
        cfg.u = u;
    }
    a.qite.apply(&mut cfg.qite);
    if !a.shots.is_empty() {
        cfg.shots = a.shots;
    }
    if a.delta_e.is_some() {
        cfg.delta_e = a.delta_e;
    }
    if let Some(r) = a.repetitions {
        cfg.repetitions = r;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(n) = a.name {
        cfg.name = n;
    }
    if cfg.qite.domain_kind == DomainKind::Full {
        let n = cfg.instance(0)?.0.n_vertices();
        fit_full_domain(&mut cfg.qite, n);
    }
    let summary = runner::run_campaign(&cfg, jobs)?;
    let dir = cfg.experiment_dir();
    summary.write_outputs(&dir)?;
    let mut shots: Vec<usize> = summary.results.iter().map(|r| r.shots).collect();
    shots.sort_unstable();
    shots.dedup();
    for m in shots {
        let rs: Vec<_> = summary.for_shots(m).collect();
        let exact = rs.iter().filter(|r| r.relative_error == 0.0).count();
        let ok = rs.iter().filter(|r| r.success).count();
        out_line(&format!(
            "M={m}: {} solves, {} exact, {} within tolerance",
            rs.len(),
            exact,
            ok
        ))?;
    }
    if summary.failed_instances > 0 {
        out_line(&format!("{} instances skipped", summary.failed_instances))?;
    }
    info!("outputs in {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bruteforce(a: GraphArg) -> qite_core::Result<ExitCode> {
    let g = UnitDiskGraph::read_file(&a.graph)?;
    let mis = g.brute_force_mis()?;
    out_line(&format!("MIS size {}; {} witnesses", mis.size, mis.witnesses.len()))?;
    for w in &mis.witnesses {
        out_line(&w.to_string())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_spectrum(a: SpectrumArgs) -> qite_core::Result<ExitCode> {
    let g = UnitDiskGraph::read_file(&a.graph)?;
    let spectrum = DiagonalHamiltonian::from_udmis(&g, a.u)?.spectrum()?;
    let line = spectrum
        .levels()
        .iter()
        .take(a.levels)
        .map(|l| format!("({}, {})", format_sig(l.energy), l.degeneracy))
        .collect::<Vec<_>>()
        .join(", ");
    out_line(&line)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(a: AuditArgs) -> qite_core::Result<ExitCode> {
    let t1 = analysis::audit_thm1_random(a.count, a.max_n, a.seed)?;
    out_line(&format!(
        "thm1: {} checks on {} random hamiltonians, {} violations, max excess {}",
        t1.checked,
        a.count,
        t1.violations,
        format_sig(t1.max_excess)
    ))?;
    let g = match &a.graph {
        Some(p) => UnitDiskGraph::read_file(p)?,
        None => UnitDiskGraph::paper_graph_6q(),
    };
    let h = DiagonalHamiltonian::from_udmis(&g, a.u)?;
    let mut cfg = QiteConfig {
        rng_seed: a.seed,
        ..QiteConfig::default()
    };
    a.qite.apply(&mut cfg);
    let mut violations = t1.violations;
    for &kind in &a.domains {
        let mut c = cfg.clone();
        c.domain_kind = kind;
        fit_full_domain(&mut c, g.n_vertices());
        let domains = DomainSet::for_kind(kind, &h, Some(&g), c.rng_seed)?;
        let run = qite_evolve(&h, &domains, &c)?;
        for &d in &a.delta_e {
            let spec = FailureSpec::new(d, 1)?;
            let recs = analysis::trajectory_metrics(&run.trace, &h, &c, &spec)?;
            let t2 = analysis::audit_thm2(&recs);
            violations += t2.violations;
            out_line(&format!(
                "thm2 domain {kind} delta_E {}: {} applicable snapshots, {} violations, max excess {}",
                format_sig(d),
                t2.checked,
                t2.violations,
                format_sig(t2.max_excess)
            ))?;
        }
    }
    Ok(if violations > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
