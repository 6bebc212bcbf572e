use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ipsgd");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs")
}

fn ipsgd(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

/// Writes a shortened copy of a bundled config, edited by `f`.
fn variant(dir: &Path, name: &str, f: impl FnOnce(&mut Value)) -> String {
    let text = fs::read_to_string(configs().join(format!("{name}.json"))).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["n_steps"] = 100.into();
    f(&mut v);
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path.display().to_string()
}

#[test]
fn list_models_prints_the_zoo() {
    let out = ipsgd(&["--list-models"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|m| m["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["linear", "double-well", "fitzhugh-nagumo", "kuramoto", "cucker-smale", "vol32"]);
}

#[test]
fn validate_reports_schedules() {
    let cfg = configs().join("linear_clt.json");
    let out = ipsgd(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schedules"][0]["report"]["rate_conditions"], true);
}

#[test]
fn repeated_triplet_index_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "linear_fig1", |v| v["estimators"][1]["triplet"] = serde_json::json!([0, 1, 1]));
    let out = ipsgd(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "parse");
    assert!(e["message"].as_str().unwrap().contains("distinct"), "{e}");
}

#[test]
fn negative_dt_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "linear_fig1", |v| v["dt"] = (-0.1).into());
    let out = ipsgd(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["field"], "dt");
}

#[test]
fn missing_config_exits_with_validation_code() {
    let out = ipsgd(&["estimate", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn usage_errors_are_json() {
    let out = ipsgd(&["estimate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    let out = ipsgd(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_honours_overrides_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "linear_fig1", |_| {});
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = ipsgd(&["estimate", "--config", &cfg, "--seed", "77", "--replicates", "2", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let manifest: Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        (manifest, fs::read_to_string(out_dir.join("summary.csv")).unwrap())
    };
    let (m1, s1) = run("a");
    let (m2, s2) = run("b");
    assert_eq!(m1, m2);
    assert_eq!(s1, s2);
    // replicates 0 and 1 with seeds 77 and 78
    assert!(s1.lines().skip(1).all(|l| l.starts_with("0,77,") || l.starts_with("1,78,")));
    assert!(s1.lines().any(|l| l.starts_with("1,78,")));
}

#[test]
fn every_run_subcommand_succeeds_on_small_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("simulate", "linear_fig1"),
        ("sweep", "linear_fig2"),
        ("surface", "linear_fig3"),
        ("diagnose", "linear_diagnose"),
    ];
    for (sub, name) in cases {
        let cfg = variant(dir.path(), name, |v| {
            if v.get("surface").is_some() {
                v["surface"]["horizon"] = 100.into();
            }
            if v.get("diagnose").is_some() {
                v["diagnose"]["coupling"]["n_big"] = 30.into();
            }
        });
        let out_dir = dir.path().join(sub);
        let out = ipsgd(&[sub, "--config", &cfg, "--replicates", "2", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("manifest.json").is_file());
    }
}

#[test]
fn total_blowup_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "double_well_sigma2", |v| v["dt"] = 2.0.into());
    let out = ipsgd(&["estimate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "runtime");
}
