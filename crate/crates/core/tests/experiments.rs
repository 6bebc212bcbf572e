mod common;

use std::fs;

use common::{config_path, CONFIG_DIR};
use ipsgd::experiments::{load_config, parse_config, run_experiment, run_replicates, Command, ExperimentConfig};
use ipsgd::Error;

fn bundled() -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(CONFIG_DIR).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        out.push((path.file_stem().unwrap().to_string_lossy().into_owned(), cfg));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Shrinks a config so a full pipeline run takes milliseconds.
fn tiny(mut cfg: ExperimentConfig) -> ExperimentConfig {
    cfg.n_steps = cfg.n_steps.min(200);
    cfg.replicates = cfg.replicates.clamp(1, 3);
    if let Some(s) = &mut cfg.surface {
        s.horizon = 200;
        s.burn_in = Some(20);
    }
    if let Some(d) = &mut cfg.diagnose {
        if let Some(c) = &mut d.coupling {
            c.n_big = 40;
        }
    }
    cfg
}

#[test]
fn bundled_configs_validate_and_are_named_after_their_files() {
    let all = bundled();
    assert!(all.len() >= 12);
    for (stem, cfg) in all {
        assert_eq!(stem, cfg.name);
    }
}

#[test]
fn unknown_fields_are_parse_errors_with_position() {
    let text = fs::read_to_string(config_path("linear_fig1")).unwrap().replacen("\"dt\"", "\"d_t\"", 1);
    match parse_config(&text).unwrap_err() {
        Error::Parse { line, column, .. } => assert!(line > 1 && column > 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn validation_names_the_offending_field() {
    let mut cfg = load_config(config_path("linear_fig1")).unwrap();
    cfg.estimators[1].schedule.scale = vec![0.008];
    match cfg.validate().unwrap_err() {
        Error::Validation { field, .. } => assert_eq!(field, "estimators[1].schedule.scale"),
        other => panic!("{other:?}"),
    }
    let mut cfg = load_config(config_path("linear_fig1")).unwrap();
    cfg.estimators[0].free = Some(vec![true, true]);
    cfg.estimators[0].schedule.scale = vec![0.008, 0.0];
    assert!(cfg.validate().unwrap_err().is_validation());
    let mut cfg = load_config(config_path("linear_fig1")).unwrap();
    cfg.n_particles = 2;
    assert!(cfg.validate().is_err(), "triplet needs three particles");
    let mut cfg = load_config(config_path("vol32")).unwrap();
    cfg.eta_true = None;
    assert!(cfg.validate().is_err());
}

#[test]
fn hash_tracks_content() {
    let a = load_config(config_path("linear_fig1")).unwrap();
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.base_seed += 1;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn estimates_start_inside_the_init_box_and_hold_fixed_parameters() {
    let cfg = tiny(load_config(config_path("double_well_sigma1")).unwrap());
    for out in run_replicates(&cfg, cfg.n_particles, 2).unwrap() {
        for e in &out.estimators {
            assert!(e.initial[0] >= 0.1 && e.initial[0] <= 0.6);
            assert!(e.initial[1] >= 3.0 && e.initial[1] <= 4.0);
            assert_eq!(e.initial[2], 2.0);
            assert_eq!(e.final_value[2], 2.0);
        }
    }
}

#[test]
fn every_command_writes_its_artifacts() {
    let cases = [
        ("linear_fig1", Command::Simulate, vec!["trajectory_r000.csv", "trajectory_r000.json"]),
        ("linear_fig1", Command::Estimate, vec!["estimates_r000.csv", "summary.csv", "estimate.json"]),
        ("linear_fig2", Command::Sweep, vec!["sweep.csv", "sweep.json"]),
        ("linear_fig3", Command::Surface, vec!["surface.csv", "surface.json"]),
        ("linear_diagnose", Command::Diagnose, vec!["moments.csv", "coupling.csv", "diagnose.json"]),
    ];
    for (name, command, files) in cases {
        let cfg = tiny(load_config(config_path(name)).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let manifest = run_experiment(&cfg, command, dir.path()).unwrap();
        for f in files {
            assert!(dir.path().join(f).is_file(), "{name}: missing {f}");
            assert!(manifest.artifacts.iter().any(|a| a.path == f), "{name}: {f} not in manifest");
        }
        assert!(dir.path().join("manifest.json").is_file());
        assert_eq!(manifest.config_sha256, cfg.hash());
    }
}

#[test]
fn missing_section_is_a_validation_error() {
    let cfg = tiny(load_config(config_path("linear_fig1")).unwrap());
    let dir = tempfile::tempdir().unwrap();
    assert!(run_experiment(&cfg, Command::Sweep, dir.path()).unwrap_err().is_validation());
}

#[test]
fn blowups_are_reported_per_replicate() {
    let mut cfg = tiny(load_config(config_path("double_well_sigma2")).unwrap());
    cfg.dt = 2.0;
    let outs = run_replicates(&cfg, cfg.n_particles, 2).unwrap();
    assert!(outs.iter().all(|o| !o.succeeded()));
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, Command::Estimate, dir.path()).unwrap_err();
    assert!(!err.is_validation());
}
