use std::path::Path;
use std::process::Command;

fn mhd0(config: &Path, extra: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mhd0"))
        .arg("run")
        .arg(config)
        .args(extra)
        .env("MHD0_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn equilibrium_run_succeeds_with_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "grid = 8\ninit = equilibrium\nt_end = 1\ndt = 0.01\ndiagnostics_every = 10\nsnapshot_every = 50\n",
    );
    let res = mhd0(&cfg, &["--output", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["steps"], 100);
    assert_eq!(summary["corridor"]["verdict"], "PASS");

    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for row in &rows {
        for (name, v) in header.iter().zip(row) {
            if name.starts_with("res_") || *name == "divH_L2" || *name == "energy_residual" {
                assert!(v.abs() <= 1e-12, "{name} = {v}");
            }
        }
    }
    assert!(out.join("snapshot_000050.bin").exists());
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(dir.path(), "grid = 16\nmax_mode = 2\nt_end = 5\n");
    let res = mhd0(
        &cfg,
        &[
            "--output",
            out.to_str().unwrap(),
            "--grid",
            "8",
            "--t-end",
            "0.02",
            "--seed",
            "9",
        ],
    );
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let written = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(written.contains("grid = 8\n"));
    assert!(written.contains("seed = 9\n"));
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["t_final"], 0.02);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    for body in [
        "rho_lower = 1.0\n",
        "no_such_key = 1\n",
        "grid = 16\nmax_mode = 9\n",
    ] {
        let cfg = write_config(dir.path(), body);
        let res = mhd0(&cfg, &["--output", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "{body}");
    }
    let res = mhd0(&dir.path().join("missing.cfg"), &[]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unstable_step_exits_3_and_flushes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(
        dir.path(),
        "grid = 8\nmax_mode = 2\ntarget_c0 = 0.5\nt_end = 100\ndt = 2\n",
    );
    let res = mhd0(&cfg, &["--output", out.to_str().unwrap()]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "blow_up");
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
}
