use rdlab_core::experiments::{
    parse_config, records_to_csv, records_to_json, run_experiment, sweep, write_outputs, OutputFormat, Recipe, RunOutput,
    RunRecord,
};
use serde_json::Value;

fn stripped(outputs: &[RunOutput]) -> Vec<RunRecord> {
    outputs
        .iter()
        .map(|o| RunRecord {
            wall_time_s: 0.0,
            ..o.record.clone()
        })
        .collect()
}

fn outcome<'a>(o: &'a RunOutput, key: &str) -> &'a Value {
    o.record
        .outcome
        .get(key)
        .unwrap_or_else(|| panic!("{} has no `{key}`: {:?}", o.record.run_id, o.record))
}

#[test]
fn every_recipe_runs_with_its_defaults() {
    for recipe in Recipe::ALL {
        let text = if recipe == Recipe::MeanValueCheck {
            format!("name = \"{recipe}\"\n")
        } else if recipe == Recipe::SubsolutionCheck {
            format!("name = \"{recipe}\"\np = 2\nq = 3\n")
        } else {
            format!("name = \"{recipe}\"\np = 2\nq = 2\n")
        };
        let spec = parse_config(&text).unwrap();
        let out = run_experiment(&spec);
        assert_eq!(out.record.status, "ok", "{recipe}: {:?}", out.record.error);
        assert!(!out.record.outcome.is_empty());
        for (k, v) in &out.record.outcome {
            if let Value::Number(n) = v {
                assert!(n.as_f64().unwrap().is_finite(), "{recipe}.{k}");
            }
        }
    }
}

#[test]
fn flat_validation_reports_small_tracking_error() {
    let out = run_experiment(&parse_config("name = \"flat_validation\"\np = 2\nq = 2\n").unwrap());
    assert!(outcome(&out, "max_rel_error_u").as_f64().unwrap() < 1e-4);
    assert_eq!(outcome(&out, "tracking_ok"), &Value::Bool(true));
}

#[test]
fn subcritical_removability_masses_persist() {
    let out = run_experiment(&parse_config("name = \"removability_sweep\"\np = 1.5\nq = 1.5\n").unwrap());
    assert!(outcome(&out, "last_two_gap").as_f64().unwrap() < 0.1);
    assert_eq!(outcome(&out, "trend"), &Value::from("converging"));
}

#[test]
fn single_point_sweep_matches_run() {
    let spec = parse_config("name = \"estimate_saturation\"\np = 2\nq = 2\nseed = 3\n").unwrap();
    let a = stripped(&sweep(&spec));
    let b = stripped(&[run_experiment(&spec)]);
    assert_eq!(a, b);
}

#[test]
fn sweeps_are_reproducible_and_seeded() {
    let text = "name = \"estimate_saturation\"\np = 2\nq = 2\nic = \"bump\"\nic_noise = 0.2\nseed = 11\n\
                [sweep]\namplitude = [1, 10, 100]\n";
    let spec = parse_config(text).unwrap();
    let first = stripped(&sweep(&spec));
    let second = stripped(&sweep(&spec));
    assert_eq!(records_to_csv(&first).unwrap(), records_to_csv(&second).unwrap());
    assert_eq!(records_to_json(&first).unwrap(), records_to_json(&second).unwrap());
    assert_eq!(first.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![11, 12, 13]);

    let mut other = spec.clone();
    other.seed = 99;
    let third = stripped(&sweep(&other));
    assert_ne!(first[0].outcome, third[0].outcome);
}

#[test]
fn failures_stay_isolated() {
    let text = "name = \"estimate_saturation\"\np = 2\nq = 2\nic = \"bump\"\n[sweep]\nwidth = [0.1, 5.0, 0.2]\n";
    let outs = sweep(&parse_config(text).unwrap());
    let status: Vec<&str> = outs.iter().map(|o| o.record.status.as_str()).collect();
    assert_eq!(status, ["ok", "failed", "ok"]);
    assert!(!outs[1].numerical_failure);
    let alone = stripped(&sweep(
        &parse_config("name = \"estimate_saturation\"\np = 2\nq = 2\nic = \"bump\"\nwidth = 0.2\nseed = 2\n").unwrap(),
    ));
    let mut third = stripped(&outs[2..]);
    third[0].run_id = alone[0].run_id.clone();
    assert_eq!(third, alone);

    let text = "name = \"flat_validation\"\np = 2\nq = 3\ntol_step = 1e-12\ndt_init = 1e-2\ndt_min = 1e-3\n";
    let out = run_experiment(&parse_config(text).unwrap());
    assert_eq!(out.record.status, "failed");
    assert!(out.numerical_failure);
}

#[test]
fn outputs_land_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_config("name = \"blowup_fit\"\np = 2\nq = 2\n[sweep]\nnodes = [21, 41]\n").unwrap();
    let outs = sweep(&spec);
    write_outputs(&outs, dir.path(), OutputFormat::Csv).unwrap();
    for name in [
        "record.csv",
        "trajectory_blowup_fit-000.csv",
        "steps_blowup_fit-001.csv",
        "sup_series_blowup_fit-001.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let record = std::fs::read_to_string(dir.path().join("record.csv")).unwrap();
    let header = record.lines().next().unwrap();
    assert!(header.starts_with("run_id,recipe,seed,status"));
    assert!(header.contains("param.nodes") && header.contains("outcome.exponent_u"));
    assert_eq!(record.lines().count(), 3);

    write_outputs(&outs, dir.path(), OutputFormat::Json).unwrap();
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("record.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[1]["params"]["nodes"], Value::from(41));
}
