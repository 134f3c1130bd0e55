//! End-to-end checks of the `netdual` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netdual"))
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn toy_config_reproduces_pinned_summary() {
    let out = run(bin().arg("solve").arg("--config").arg(manifest("examples/toy.cfg")));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pinned = std::fs::read_to_string(manifest("tests/fixtures/toy_summary.txt")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), pinned);
}

#[test]
fn solve_twice_gives_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = run(bin()
            .args(["solve", "--config"])
            .arg(manifest("examples/toy.cfg"))
            .args(["--p", "1", "--solver", "acrcd", "--max-iter", "3000", "--output"])
            .arg(&out_dir));
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(out_dir.join("trace.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let header = String::from_utf8_lossy(&csvs[0]).lines().next().unwrap().to_string();
    assert_eq!(header, "iter,dual_obj,primal_obj,gap,consensus_residual,n_comm,n_comp,wall_ms");
}

#[test]
fn gen_then_solve_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    let topo = dir.path().join("topo.txt");
    let out = run(bin()
        .args(["gen", "--seed", "3", "--m", "5", "--n", "2", "--d", "4", "--p", "2", "--out"])
        .arg(&inst)
        .args(["--topology", "star 5", "--topology-out"])
        .arg(&topo));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(bin()
        .args(["solve", "--solver", "stm", "--max-iter", "100", "--instance"])
        .arg(&inst)
        .arg("--topology")
        .arg(format!("file:{}", topo.display())));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("iterations = 100"));
}

#[test]
fn config_errors_exit_2() {
    let out = run(bin().args(["gen", "--m", "3", "--n", "2", "--d", "2", "--out", "/tmp/never"]));
    assert_eq!(code(&out), 2, "gen without --seed");
    let cfg = manifest("examples/toy.cfg");
    let out = run(bin().arg("solve").arg("--config").arg(&cfg).args(["--solver", "acrcd"]));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("acrcd requires p = 1"));
    let out = run(bin().arg("solve").arg("--config").arg(&cfg).args(["--max-iter", "many"]));
    assert_eq!(code(&out), 2);
    let out = run(bin().args(["solve", "--instance", "/nonexistent/file", "--topology", "ring 4", "--solver", "stm"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn numeric_failures_exit_3() {
    let out = run(bin()
        .arg("solve")
        .arg("--config")
        .arg(manifest("examples/toy.cfg"))
        .args(["--lipschitz", "1e-6"]));
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rate_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = manifest("examples/toy.cfg");
    let out = run(bin().arg("solve").arg("--config").arg(&cfg).arg("--output").arg(dir.path()));
    assert_eq!(code(&out), 0);
    let out = run(bin()
        .arg("rate")
        .arg("--trace")
        .arg(dir.path().join("trace.csv"))
        .args(["--column", "gap", "--fstar", "0", "--from", "10", "--to", "500"]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let slope: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("slope = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(slope < -1.0, "gap slope {slope}");

    let out = run(bin().arg("compare").arg("--config").arg(&cfg).args(["--max-iter", "300"]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("stm") && table.contains("subgradient"));
}
