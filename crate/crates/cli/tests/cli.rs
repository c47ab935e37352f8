use std::path::Path;
use std::process::{Command, Output};

fn periflux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_periflux"))
        .args(args)
        .env_remove("PERIFLUX_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, tasks: &str, profile: &str, nu: &str) -> String {
    let text = format!(
        r#"{{"geometry": {{"profile": {profile}, "kind": "AXISYM", "nxi": 16, "nzeta": 8}},
            "physics": {{"nu": {nu}, "T": 1, "flux": {{"type": "cosine", "amplitude": 1}}}},
            "solver": {{"m": 8, "snapshots": 4, "oracle_tol": 1e-2}},
            "tasks": {tasks},
            "output": "out"}}"#
    );
    let p = dir.join("run.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const STRAIGHT: &str = r#"{"kind": "straight", "L": 1}"#;

fn stderr_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).expect("error JSON")
}

#[test]
fn eig_run_writes_the_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["eig"]"#, STRAIGHT, "1");
    let o = periflux(&["run", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["eig"]["eigenvalues"].as_array().unwrap().len(), 8);
    assert!(dir.path().join("out/eigenfield_007.csv").exists());
}

#[test]
fn negative_viscosity_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["eig"]"#, STRAIGHT, "-1");
    let o = periflux(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "config-parse-error");
    assert_eq!(e["key"], "physics.nu");
}

#[test]
fn missing_file_and_bad_threads_exit_two() {
    assert_eq!(periflux(&["validate", "/nonexistent/run.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["eig"]"#, STRAIGHT, "1");
    let o = Command::new(env!("CARGO_BIN_EXE_periflux"))
        .args(["validate", &cfg])
        .env("PERIFLUX_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["key"], "PERIFLUX_THREADS");
}

#[test]
fn stokes_and_oracle_compare_on_a_straight_pipe() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["stokes", "oracle-compare"]"#, STRAIGHT, "1");
    let out = dir.path().join("elsewhere");
    let o = periflux(&["run", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["oracle"]["oracle"], "radial");
    assert!(summary["oracle"]["diff"]["rel_l2"].as_f64().unwrap() < 1e-2);
    let psi = std::fs::read_to_string(out.join("stokes_psi.csv")).unwrap();
    assert!(psi.starts_with("t,g,psi\n"));
}

#[test]
fn summaries_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["stokes", "estimates"]"#, r#"{"kind": "sinusoidal", "eps": 0.2, "L": 1}"#, "1");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(periflux(&["run", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]).status.success());
    assert!(periflux(&["run", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]).status.success());
    let read = |d: &Path| std::fs::read(d.join("summary.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(std::fs::read(a.join("stokes_t001.csv")).unwrap(), std::fs::read(b.join("stokes_t001.csv")).unwrap());
}

#[test]
fn failed_checks_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"geometry": {{"profile": {{"kind": "sinusoidal", "eps": 0.2, "L": 1}}, "kind": "PLANAR2D", "nxi": 8, "nzeta": 8}},
            "physics": {{"nu": 1, "T": 1, "flux": {{"type": "constant", "g0": 1}}}},
            "solver": {{"flux_tol": 1e-30}},
            "tasks": ["stokes"]}}"#
    );
    let p = dir.path().join("run.json");
    std::fs::write(&p, text).unwrap();
    let o = periflux(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "assertion-failure");
    assert_eq!(e["failed"][0]["name"], "flux error");
    assert!(!dir.path().join("periflux-out").exists());
}
