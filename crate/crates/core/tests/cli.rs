use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ppstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppstat")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ppstat(&args)
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

const SMALL_JSD: &str = r#"
seed = 3
[jsd]
source = "gaussian"
sigma_plus = 1.0
sigma_minus = 0.3
theta = -0.7853981633974483
n_s = 48
n_i = 48
xi_sq = 1e-3

[filter_s]
kind = "rect"
width = 1.5

[filter_i]
kind = "rect"
width = 1.5
"#;

const SIMULATE: &str = r#"
seed = 5
[detectors]
gamma_s = [1.0, 0.5]
gamma_i = [1.0, 0.5]

[simulate]
source = "random"
p_g = 1e-2
n_m = 1e9

[estimate]
method = "ml"
restarts = 1
"#;

#[test]
fn jsd_writes_report_and_pnd() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "jsd.toml", SMALL_JSD);
    let out = tmp.path().join("out");
    assert_ok(&run("jsd", &cfg, &out, &[]));
    let report = fs::read_to_string(out.join("jsd_report.csv")).unwrap();
    assert!(report.starts_with("quantity,value"));
    assert!(out.join("pnd.csv").exists());
}

#[test]
fn simulate_then_estimate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SIMULATE);
    let out = tmp.path().join("sim");
    assert_ok(&run("simulate", &cfg, &out, &[]));
    let counts = out.join("counts_000.csv");
    let log = fs::read_to_string(&counts).unwrap();
    assert!(log.starts_with("nu,n_m,f11"));
    assert_eq!(log.lines().count(), 3);
    assert!(out.join("truth_000.csv").exists());

    let est = tmp.path().join("est");
    assert_ok(&run("estimate", &cfg, &est, &["--counts", counts.to_str().unwrap()]));
    let chars = fs::read_to_string(est.join("characteristics.csv")).unwrap();
    assert!(chars.lines().any(|l| l.starts_with("p_g,")), "{chars}");
    assert!(est.join("pnd.csv").exists());
}

#[test]
fn same_seed_gives_identical_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SIMULATE);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_ok(&run("simulate", &cfg, &a, &[]));
    assert_ok(&run("simulate", &cfg, &b, &[]));
    assert_ok(&run("simulate", &cfg, &c, &["--seed", "6"]));
    let read = |d: &Path| fs::read(d.join("counts_000.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn malformed_counts_exit_with_input_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SIMULATE);
    let counts = write(tmp.path(), "bad.csv", "nu,n_m,f1,f2\n0,10,4,six\n");
    let o = run("estimate", &cfg, &tmp.path().join("o"), &["--counts", counts.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_setting_exits_with_mismatch() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "sim.toml", SIMULATE);
    let out = tmp.path().join("sim");
    assert_ok(&run("simulate", &cfg, &out, &[]));
    let log = fs::read_to_string(out.join("counts_000.csv")).unwrap();
    let mut lines: Vec<String> = log.lines().map(String::from).collect();
    let last = lines.pop().unwrap();
    let rest = last.split_once(',').unwrap().1;
    lines.push(format!("5,{rest}"));
    let counts = write(tmp.path(), "shifted.csv", &(lines.join("\n") + "\n"));
    let o = run("estimate", &cfg, &tmp.path().join("o"), &["--counts", counts.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &SIMULATE.replace("n_m = 1e9", "n_m = 1e9\nnm = 3"));
    let o = run("simulate", &cfg, &tmp.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nm"));
}
