//! End-to-end runs of the `qite` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qite")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_paper_graph(dir: &Path) -> String {
    let path = dir.join("paper.txt");
    let o = qite(&["generate", "--paper6", "-o", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn bruteforce_and_spectrum_on_benchmark_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_paper_graph(dir.path());
    let o = qite(&["bruteforce", &graph]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "MIS size 2; 3 witnesses\n001001\n100010\n101000\n");
    let o = qite(&["spectrum", &graph]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "(-2, 3), (-1.65, 2)");
}

#[test]
fn generate_is_deterministic() {
    let a = qite(&["generate", "-n", "7", "--seed", "5"]);
    let b = qite(&["generate", "-n", "7", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("n=7"));
}

#[test]
fn solve_prints_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_paper_graph(dir.path());
    let o = qite(&["solve", &graph, "-M", "12", "--n-max", "100", "--seed", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 3);
    assert!(v["best_energy"].as_f64().unwrap() <= -1.65 + 1e-9);
    assert_eq!(v["best_bitstring"].as_str().unwrap().len(), 6);
    assert!(v["success"].is_boolean());
    let again = qite(&["solve", &graph, "-M", "12", "--n-max", "100", "--seed", "3"]);
    assert_eq!(again.stdout, o.stdout);

    let detailed = qite(&["solve", &graph, "-M", "5", "--n-max", "10", "--detailed"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&detailed)).unwrap();
    assert_eq!(v["shot_energies"].as_array().unwrap().len(), 5);
}

#[test]
fn characterize_writes_trajectories_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = qite(&[
        "characterize",
        "--n-max",
        "50",
        "--domains",
        "A,B",
        "--delta-e",
        "0,0.35",
        "--out",
        out.to_str().unwrap(),
        "--name",
        "six",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let exp = out.join("six");
    for f in ["trajectory-A.csv", "trajectory-B.csv", "trajectory-A-dE0.35.csv", "pfm.csv", "bounds.txt"] {
        assert!(exp.join(f).is_file(), "missing {f}");
    }
    let traj = fs::read_to_string(exp.join("trajectory-A.csv")).unwrap();
    assert!(traj.starts_with("t,epsilon,epsilon_bar,fidelity_ite,fidelity_final,pf_ite,pf_qite,thm1_bound,thm2_rhs\n"));
    assert_eq!(traj.lines().count(), 1 + 6);
    let pfm = fs::read_to_string(exp.join("pfm.csv")).unwrap();
    assert!(pfm.starts_with("state,delta_e,M,pf_single,pf_m\n"));
}

#[test]
fn campaign_from_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.toml");
    fs::write(
        &config,
        format!(
            r#"name = "small"
output_dir = "{}"
shots = [6, 12]
repetitions = 2

[instance]
source = "random"
count = 5
n = 6
master_seed = 9

[qite]
n_max = 20
"#,
            dir.path().display()
        ),
    )
    .unwrap();
    let o = qite(&["--jobs", "2", "campaign", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("M=6: 10 solves"));
    let exp = dir.path().join("small");
    let jsonl = fs::read_to_string(exp.join("results.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 20);
    for line in jsonl.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    assert!(exp.join("hist-eigenvalues.csv").is_file());
    assert!(exp.join("hist-relerr.csv").is_file());
}

#[test]
fn audit_reports_no_violations() {
    let o = qite(&["audit", "--count", "50", "--n-max", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("0 violations"));
}

#[test]
fn errors_map_to_exit_codes() {
    let missing = qite(&["bruteforce", "/definitely/not/here.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/definitely/not/here.txt"));

    assert_eq!(qite(&["generate", "-n", "0"]).status.code(), Some(2));
    assert_eq!(qite(&["solve", "--bogus"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "n=3\ne 0 7\n").unwrap();
    assert_eq!(qite(&["spectrum", bad.to_str().unwrap()]).status.code(), Some(2));

    let graph = write_paper_graph(dir.path());
    assert_eq!(qite(&["solve", &graph, "--tau", "-1"]).status.code(), Some(2));
}
