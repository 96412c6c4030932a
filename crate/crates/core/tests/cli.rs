use std::path::Path;
use std::process::Command;

use fracphase_core::snapshot::read_snapshot;
use fracphase_core::spectral::{BoundaryCondition, Domain, SpatialGrid};

fn fracphase(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fracphase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn converge_writes_an_order_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracphase(&[
        "converge",
        "--example",
        "1",
        "--scheme",
        "l1plus",
        "--M",
        "4",
        "--levels",
        "3",
        "--nx",
        "8",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("converge_ex1_l1plus.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "M,tau,error,order");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("4,"));
    assert!(lines[3].starts_with("16,"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# short coarsening run\nscheme = l1\nalpha = 0.7\nnx = 16\nT = 0.5\nseed = 3\n",
    )
    .unwrap();
    let out = fracphase(&[
        "coarsen",
        "--config",
        cfg.to_str().unwrap(),
        "--T",
        "0.2",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let energy = std::fs::read_to_string(dir.path().join("coarsen_energy.csv")).unwrap();
    let last: Vec<f64> = energy
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((last[1] - 0.2).abs() < 1e-12);
    let grid = SpatialGrid::new(16, 16, Domain::square(-1.0, 1.0), BoundaryCondition::Neumann).unwrap();
    let snap = read_snapshot(&dir.path().join("snapshot_t0.20.bin"), &grid).unwrap();
    assert!(snap.max_abs() < 1.5);
}

#[test]
fn invalid_input_exits_with_config_error() {
    let out = fracphase(&["energy", "--scheme", "l3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = fracphase(&["energy", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}
