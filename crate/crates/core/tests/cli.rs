use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use fkpde::fkf::load_fkf;
use fkpde::kernel::propagate;
use fkpde::service::{Client, ServiceConfig};
use fkpde::Field;

fn fk(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fk"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("fk runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::File::create(dir.join(name))
        .unwrap()
        .write_all(text.as_bytes())
        .unwrap();
}

#[test]
fn generate_and_solve_round_trip_through_fkf() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fk(
        &[
            "gen-ic",
            "--pde",
            "convdiff:E2",
            "--count",
            "2",
            "--seed",
            "4",
            "--out",
            "ic.fkf",
        ],
        d,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ics = load_fkf(d.join("ic.fkf")).unwrap();
    assert_eq!(ics.len(), 2);
    assert_eq!(ics[0].grid().len(), 64);

    let out = fk(
        &[
            "solve-ref",
            "--pde",
            "convdiff:E2",
            "--ic",
            "ic.fkf",
            "--out",
            "ref.fkf",
            "--scheme",
            "exact",
            "--steps",
            "10",
        ],
        d,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(load_fkf(d.join("ref.fkf")).unwrap().len(), 20);

    let out = fk(
        &[
            "solve-mc",
            "--pde",
            "convdiff:E2",
            "--ic",
            "ic.fkf",
            "--out",
            "mc.fkf",
            "--particles",
            "10",
            "--steps",
            "20",
            "--seed",
            "1",
        ],
        d,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = load_fkf(d.join("mc.fkf")).unwrap();
    fk(
        &[
            "solve-mc",
            "--pde",
            "convdiff:E2",
            "--ic",
            "ic.fkf",
            "--out",
            "mc2.fkf",
            "--particles",
            "10",
            "--steps",
            "20",
            "--seed",
            "1",
        ],
        d,
    );
    assert_eq!(a, load_fkf(d.join("mc2.fkf")).unwrap());
}

#[test]
fn pde_config_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "ac.cfg", "pde = allen_cahn\nboundary = neumann\nN = 3\n");
    let out = fk(
        &[
            "gen-ic", "--pde", "ac.cfg", "--count", "1", "--out", "ic.fkf",
        ],
        d,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(load_fkf(d.join("ic.fkf")).unwrap()[0].grid().len(), 65);
}

#[test]
fn bench_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "ok.cfg",
        "suite = convdiff\ncase = E1\nsolver = propagator\nsteps = 10\ntest_size = 3\n",
    );
    let out = fk(&["bench", "--config", "ok.cfg", "--out", "ok.json"], d);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(d.join("ok_E1.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("frame,e_l2,e_linf"));
    assert_eq!(csv.lines().count(), 11);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("ok.json")).unwrap()).unwrap();
    assert_eq!(report["cases"][0]["case"], "E1");

    write(
        d,
        "blow.cfg",
        "suite = convdiff\ncase = E1\nsolver = spectral\nsteps = 1000\ntest_size = 1\n",
    );
    assert_eq!(
        fk(&["bench", "--config", "blow.cfg", "--out", "blow.json"], d)
            .status
            .code(),
        Some(2)
    );

    write(
        d,
        "bad.cfg",
        "suite = convdiff\nsolver = propagator\nsteps = 7\n",
    );
    assert_eq!(
        fk(&["bench", "--config", "bad.cfg", "--out", "bad.json"], d)
            .status
            .code(),
        Some(3)
    );
    write(d, "typo.cfg", "suite = convdiff\nstepz = 10\n");
    assert_eq!(
        fk(&["bench", "--config", "typo.cfg", "--out", "bad.json"], d)
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn export_op_writes_linear_operators_only() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = fk(&["export-op", "--pde", "convdiff:E4", "--out", "e4.fkw"], d);
    assert!(out.status.success());
    let op = fkpde::kernel::load_operator(d.join("e4.fkw"), Some(0.2)).unwrap();
    assert_eq!(op.rows, 64);
    let out = fk(
        &["export-op", "--pde", "navier_stokes:E1", "--out", "ns.fkw"],
        d,
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fk serve"));
}

#[test]
fn serve_over_stdio() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "p.cfg", "suite = convdiff\ncase = E2\n");
    let mut child = Command::new(env!("CARGO_BIN_EXE_fk"))
        .args(["serve", "--pde-config", "p.cfg", "--transport", "stdio"])
        .current_dir(d)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut client = Client::new(child.stdout.take().unwrap(), child.stdin.take().unwrap());
    let cfg = ServiceConfig::parse("suite = convdiff\ncase = E2\n").unwrap();
    let u = Field::from_fn(cfg.pde.grid, |x| (6.0 * std::f64::consts::PI * x[0]).cos());
    let served = client.propagate(&u, 0.0).unwrap();
    let library = propagate(&u, &cfg.pde, 0.0, &cfg.propagator).unwrap();
    assert_eq!(served, library);
    client.shutdown().unwrap();
    assert!(child.wait().unwrap().success());
}
