use std::path::Path;
use std::process::{Command, Output};

fn ccflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn ccflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn geometry_check_segment_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ccflow(&["geometry-check", "--curve", "segment"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.txt", "report.csv", "resolved-config.toml"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn capacity_ladder_segment_const() {
    let dir = tempfile::tempdir().unwrap();
    let o = ccflow(&["capacity-ladder", "--curve", "segment", "--f", "const"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let last = csv.lines().filter(|l| l.starts_with("eps=")).last().unwrap();
    let err: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!(err < 1e-3, "final error {err}");
}

#[test]
fn missing_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ccflow(&["geometry-check", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_config_reports_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[capacity]\neps0 = 0.2\nradius = 1\n").unwrap();
    let o = ccflow(&["geometry-check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("radius"), "{err}");
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ccflow(&["geometry-check", "--set", "capacity.eps=0.5"], dir.path())), 2);
    assert_eq!(code(&ccflow(&["geometry-check", "--curve", "spiral"], dir.path())), 2);
    assert_eq!(code(&ccflow(&["no-such-command"], dir.path())), 2);
}

#[test]
fn resolved_config_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = ccflow(&["solve-limit", "--set", "grid.n=12", "--set", "solve.t_end=0.0075", "--vtk"], &a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(a.join("limit-0000.vtk").exists());
    let resolved = a.join("resolved-config.toml");
    let o = ccflow(&["solve-limit", "--config", resolved.to_str().unwrap()], &b);
    assert_eq!(code(&o), 0);
    for f in ["limit-steps.csv", "curve.csv", "limit-0001.vtk"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn failing_chart_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[curve.spec]\nkind = \"arc\"\ncenter = [0.5, 0.5, 0.5]\nradius = 0.05\n[capacity]\neps0 = 0.1\neps = 0.01\n",
    )
    .unwrap();
    let o = ccflow(&["geometry-check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] J_F positive"));
}

#[test]
fn version_prints() {
    let o = Command::new(env!("CARGO_BIN_EXE_ccflow")).arg("version").output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ccflow "));
}
