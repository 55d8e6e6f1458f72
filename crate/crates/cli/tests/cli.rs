use std::path::Path;
use std::process::{Command, Output};

fn rdlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_record_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.toml", "name = \"flat_validation\"\np = 2\nq = 2\nnodes = 51\n");
    let out = dir.path().join("out");
    let res = rdlab(&["run", &cfg], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).starts_with("flat_validation-000: ok"));
    let record = std::fs::read_to_string(out.join("record.csv")).unwrap();
    assert_eq!(record.lines().count(), 2);
    assert!(out.join("trajectory_flat_validation-000.csv").exists());
    assert!(out.join("steps_flat_validation-000.csv").exists());
}

#[test]
fn sweep_with_json_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sat.toml",
        "name = \"estimate_saturation\"\np = 2\nq = 2\nnodes = 51\nseed = 1\n[sweep]\namplitude = [10, 100]\n",
    );
    let out = dir.path().join("out");
    let res = rdlab(&["sweep", &cfg, "--format", "json", "--seed", "40"], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
    let seeds: Vec<u64> = json.as_array().unwrap().iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, [40, 41]);
    assert!(out.join("trajectory_estimate_saturation-001.csv").exists());
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "name = \"flat_validation\"\np = 2\nq = 2\nnodez = 5\n");
    let res = rdlab(&["run", &cfg], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nodez"));

    let res = rdlab(&["run", "/nonexistent/config.toml"], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "stiff.toml",
        "name = \"flat_validation\"\np = 2\nq = 3\ntol_step = 1e-12\ndt_init = 1e-2\ndt_min = 1e-3\n",
    );
    let out = dir.path().join("out");
    let res = rdlab(&["run", &cfg], &out);
    assert_eq!(res.status.code(), Some(2));
    let record = std::fs::read_to_string(out.join("record.csv")).unwrap();
    assert!(record.contains("failed"));
}
