//! End-to-end runs of the command-line tool on a tiny campaign.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = "\
# tiny campaign
n=40
T=4000
K=3
grid_start=0.03
grid_step=0.03
grid_count=5
eval_start=0.06
eval_step=0.03
eval_count=2
s=6
N_e=10
seed=5
diag_p=0.06
diag_replicates=2
diag_pairs=50
diag_vectors=30
deviance_p=0.06
";

fn glsbi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glsbi")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = glsbi(args);
    assert!(out.status.success(), "glsbi {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    fs::write(&cfg, TINY).unwrap();
    let out = dir.path().join("out");
    (dir, cfg, out)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_campaign_writes_every_output() {
    let (_dir, cfg, out) = setup();
    let table = out.join("table.csv");
    ok(&["build-table", "--config", s(&cfg), "--out", s(&out)]);
    assert!(table.exists());
    assert_eq!(header(&out.join("distances.csv")), "p,kind,m,bins,tv,wasserstein");
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.lines().any(|l| l == "# format_version=1"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);

    ok(&["evaluate", "--config", s(&cfg), "--out", s(&out), "--table", s(&table)]);
    assert_eq!(header(&out.join("results.csv")), "p_true,variant,s,p_tilde,p_hat,ci_lo,ci_hi,flags");
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 10);
    assert!(results.lines().skip(1).all(|l| l.split(',').nth(1) == Some("spikefreq_gaussian")));
    assert_eq!(fs::read_to_string(out.join("summary.csv")).unwrap().lines().count(), 3);

    let obs = out.join("obs.txt");
    fs::write(&obs, "# kind=spikefreq\n0.02\n0.03\n0.025\n0.04\n").unwrap();
    let line = ok(&["estimate", "--config", s(&cfg), "--table", s(&table), "--level", "0.9", s(&obs)]);
    let mut lines = line.lines();
    assert_eq!(lines.next(), Some("variant,s,p_tilde,p_hat,ci_lo,ci_hi,level,flags"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields[0], "spikefreq_gaussian");
    assert_eq!(fields[1], "4");
    let (lo, hat, hi): (f64, f64, f64) = (fields[4].parse().unwrap(), fields[3].parse().unwrap(), fields[5].parse().unwrap());
    assert!(lo <= hat && hat <= hi);
    assert_eq!(fields[6].parse::<f64>().unwrap(), 0.9);

    ok(&["diagnostics", "--config", s(&cfg), "--out", s(&out), "--table", s(&table)]);
    for name in ["correlations.csv", "pairs.csv", "mahalanobis.csv", "gaussian_distance.csv", "deviance.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    assert!(out.join("qq_mahalanobis_p0_06.csv").exists());
    assert!(out.join("qq_deviance_p0_06.csv").exists());

    ok(&["baseline", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(header(&out.join("baseline.csv")), "s,p,optimal_mae,optimal_se");
    for cmd in ["build-table", "evaluate", "diagnostics", "baseline"] {
        assert!(out.join(format!("{cmd}.manifest")).exists());
    }
}

#[test]
fn manifest_relaunch_reproduces_the_table() {
    let (dir, cfg, out) = setup();
    ok(&["build-table", "--config", s(&cfg), "--out", s(&out), "--seed", "12"]);
    let again = dir.path().join("again");
    ok(&["build-table", "--config", s(&out.join("build-table.manifest")), "--out", s(&again)]);
    assert_eq!(fs::read(out.join("table.csv")).unwrap(), fs::read(again.join("table.csv")).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let (_dir, cfg, out) = setup();
    ok(&["build-table", "--config", s(&cfg), "--out", s(&out), "--kind", "alpha", "--set", "T=6000"]);
    let text = fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(text.contains("# kind=alpha"));
    assert!(text.contains("# T=6000"));
}

#[test]
fn exit_codes() {
    let (dir, cfg, out) = setup();
    let code = |args: &[&str]| glsbi(args).status.code();

    // configuration problems
    assert_eq!(code(&["build-table", "--config", s(&cfg), "--set", "grid_count=0"]), Some(2));
    assert_eq!(code(&["evaluate", "--config", s(&cfg), "--out", s(&out)]), Some(2));
    assert_eq!(code(&["baseline", "--kind", "rate"]), Some(2));

    // missing files
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&["evaluate", "--config", s(&cfg), "--table", s(&missing)]), Some(4));

    // every statistic excluded at every grid point
    assert_eq!(
        code(&["build-table", "--config", s(&cfg), "--out", s(&out), "--kind", "alpha", "--set", "T=1"]),
        Some(3)
    );

    // observation of the wrong kind for the table
    let table_dir = dir.path().join("t");
    ok(&["build-table", "--config", s(&cfg), "--out", s(&table_dir)]);
    let obs = dir.path().join("obs.txt");
    fs::write(&obs, "# kind=alpha\n3.5\n4.0\n").unwrap();
    let table = table_dir.join("table.csv");
    assert_eq!(code(&["estimate", "--table", s(&table), s(&obs)]), Some(2));
    fs::write(&obs, "0.01\nabc\n").unwrap();
    assert_eq!(code(&["estimate", "--table", s(&table), s(&obs)]), Some(2));
}
