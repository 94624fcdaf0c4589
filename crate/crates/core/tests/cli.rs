use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_gibbs-interp");

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn hex(v: &Value) -> f64 {
    gibbs_interp::hexfloat::parse(v.as_str().unwrap()).unwrap()
}

const IDEAL: &str = r#"{"schema":"gibbs-interp/run-config/v1","potential":{"kind":"zero","dimension":2},
    "n":2,"lambda":0.5,"epsilon":0.05,"zero_free":{"delta_zf":3.5,"c_bound":1.0}}"#;

const RODS: &str = r#"{"schema":"gibbs-interp/run-config/v1","potential":{"kind":"hard-sphere","dimension":1,"radius":0.5},
    "n":1,"epsilon":0.01,"k_max":2,"mode":"certified"}"#;

#[test]
fn ideal_gas_run_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ideal.json", IDEAL);
    let (code, stdout, stderr) = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["schema"], "gibbs-interp/result/v1");
    assert_eq!(doc["verb"], "run");
    assert_eq!(hex(&doc["result"]["log_z_per_volume"]), 0.5);
}

#[test]
fn exit_codes_separate_input_errors_from_refusals() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", &IDEAL.replace("0.05", "1.5"));
    let (code, _, stderr) = run(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("epsilon"), "{stderr}");

    let narrow = write_config(dir.path(), "narrow.json", &IDEAL.replace("3.5", "0.05"));
    let (code, _, stderr) = run(&["run", "--config", narrow.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("disk map stage"), "{stderr}");

    let (code, _, _) = run(&["run"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["run", "--config", bad.to_str().unwrap(), "--mode", "fast"]);
    assert_eq!(code, 1);
}

#[test]
fn coefficients_verb() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_config(dir.path(), "one.json", &RODS.replace("\"k_max\":2", "\"k_max\":1"));
    let (code, stdout, stderr) = run(&["coefficients", "--config", one.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    let cs = doc["coefficients"].as_array().unwrap();
    assert_eq!(cs.len(), 1);
    assert_eq!(hex(&cs[0]["value"]), 1.0);

    let two = write_config(dir.path(), "two.json", RODS);
    let (code, stdout, _) = run(&["coefficients", "--config", two.to_str().unwrap()]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    let c2 = &doc["coefficients"][1];
    assert!((hex(&c2["value"]) + 0.875).abs() <= hex(&c2["error_bound"]));
    assert!(hex(&c2["error_bound"]) <= 0.01);
}

#[test]
fn cache_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.json");
    let cfg = RODS.replace("\"k_max\":2", &format!("\"k_max\":2,\"cache\":{:?}", cache.to_str().unwrap()));
    let cfg = write_config(dir.path(), "cached.json", &cfg);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(run(&["coefficients", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).0, 0);
    assert!(cache.exists());
    assert_eq!(run(&["coefficients", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]).0, 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn tonks_run_with_verification_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tonks.json",
        r#"{"schema":"gibbs-interp/run-config/v1","potential":{"kind":"hard-sphere","dimension":1,"radius":0.5},
            "n":2,"lambda":0.1,"epsilon":0.05,"mode":"adaptive","zero_free":{"delta_zf":0.7,"c_bound":1.4},
            "verify":true,"seed":3,"plot_data":true}"#,
    );
    let out = dir.path().join("tonks.json.out");
    let (code, _, stderr) = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let comparisons = doc["verification"]["comparisons"].as_array().unwrap();
    assert!(comparisons.iter().any(|c| c["oracle"] == "tonks"));
    assert!(comparisons.iter().all(|c| c["pass"] == true), "{comparisons:?}");
    let sums = std::fs::read_to_string(dir.path().join("tonks.json.partial_sums.csv")).unwrap();
    assert!(sums.starts_with("terms,partial_sum\n"));
    let budget = std::fs::read_to_string(dir.path().join("tonks.json.budget.csv")).unwrap();
    assert!(budget.contains("\ntotal,"));
}

#[test]
fn threshold_and_certify_map_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let th = write_config(
        dir.path(),
        "th.json",
        r#"{"schema":"gibbs-interp/run-config/v1","potential":{"kind":"hard-sphere","dimension":1,"radius":1.0}}"#,
    );
    let (code, stdout, _) = run(&["threshold", "--config", th.to_str().unwrap()]);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(hex(&doc["threshold"]["lambda"]), std::f64::consts::E / 2.0);

    let map = write_config(
        dir.path(),
        "map.json",
        r#"{"schema":"gibbs-interp/run-config/v1","gamma":7.0,"map":{"rho":0.5,"beta_anchor":0.15,"degree":1}}"#,
    );
    let (code, stdout, stderr) = run(&["certify-map", "--config", map.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["map"]["degree"], 1);

    let bad = write_config(
        dir.path(),
        "bad_map.json",
        r#"{"schema":"gibbs-interp/run-config/v1","gamma":0.01,"map":{"rho":0.5,"beta_anchor":0.5,"degree":3}}"#,
    );
    assert_eq!(run(&["certify-map", "--config", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rods.json", RODS);
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}.json"));
        let (code, _, stderr) =
            run(&["coefficients", "--config", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{stderr}");
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
