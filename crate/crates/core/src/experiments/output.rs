use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{run_replicate, run_replicates, simulation_spec, ExperimentConfig, ReplicateOutcome};
use crate::diagnostics::{clt_rescaled_moments, coupling_sweep, l2_error_sweep, MomentTracker};
use crate::error::{Error, Result};
use crate::estimators::ESTIMATE_CSV_HEADER;
use crate::objective::surface_scan;
use crate::sde::{initial_ensemble, run_trajectory, ParticleNoise, TrajectoryMeta, TrajectoryWriter, GENERATOR_NAME};

/// What `run_experiment` produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Estimate,
    Sweep,
    Surface,
    Diagnose,
}

/// One written file and its content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything a run wrote. Serialized as `manifest.json` in the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub name: String,
    pub command: Command,
    pub config_sha256: String,
    pub version: &'static str,
    pub artifacts: Vec<Artifact>,
}

struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), artifacts: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// Metadata shared by every sidecar: enough to re-run the output exactly.
fn run_metadata(cfg: &ExperimentConfig, command: Command) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "config_sha256": cfg.hash(),
        "base_seed": cfg.base_seed,
        "replicates": cfg.replicates,
        "seed_ladder": "replicate r uses base_seed + r; particle i uses stream i",
        "generator": GENERATOR_NAME,
        "version": crate::VERSION,
        "config": cfg,
    })
}

fn check_any_succeeded(outcomes: &[ReplicateOutcome]) -> Result<()> {
    if !outcomes.is_empty() && outcomes.iter().all(|o| !o.succeeded()) {
        let first = outcomes[0].failure.clone().unwrap_or_default();
        return Err(Error::Runtime(format!("all {} replicates failed; first: {first}", outcomes.len())));
    }
    Ok(())
}

/// Executes `command` for a validated config, writing outputs and a manifest
/// into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, command: Command, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let mut w = ArtifactWriter::new(out_dir)?;
    match command {
        Command::Simulate => simulate(cfg, &mut w)?,
        Command::Estimate => estimate(cfg, &mut w)?,
        Command::Sweep => {
            let spec = cfg.sweep.as_ref().ok_or_else(|| Error::validation("sweep", "config has no sweep section"))?;
            let table = l2_error_sweep(cfg, &spec.n_list, cfg.replicates)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            w.write("sweep.csv", &buf)?;
            w.write_json("sweep.json", &run_metadata(cfg, command))?;
        }
        Command::Surface => {
            let spec = cfg.surface.as_ref().ok_or_else(|| Error::validation("surface", "config has no surface section"))?;
            let sim = simulation_spec(cfg)?;
            let scan = surface_scan(&sim, cfg.n_particles, spec, cfg.base_seed)?;
            let mut buf = Vec::new();
            scan.write_csv(&mut buf)?;
            w.write("surface.csv", &buf)?;
            let mut meta = run_metadata(cfg, command);
            meta["surface"] = scan.metadata(sim.model.id(), cfg.dt);
            w.write_json("surface.json", &meta)?;
        }
        Command::Diagnose => diagnose(cfg, &mut w)?,
    }
    let manifest = Manifest {
        name: cfg.name.clone(),
        command,
        config_sha256: cfg.hash(),
        version: crate::VERSION,
        artifacts: w.artifacts.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join("manifest.json"), text)?;
    Ok(manifest)
}

fn simulate(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let sim = simulation_spec(cfg)?;
    let every = cfg.trajectory_every.unwrap_or(cfg.record_every);
    let mut failures = 0;
    for r in 0..cfg.replicates {
        let seed = super::replicate_seed(cfg.base_seed, r);
        let mut noise = ParticleNoise::new(seed, cfg.n_particles, sim.model.state_dim());
        let x0 = initial_ensemble(&mut noise)?;
        let mut writer = TrajectoryWriter::new(Vec::new(), &x0, every)?;
        let status = match run_trajectory(&sim, x0, &mut noise, &mut [&mut writer]) {
            Ok(_) => None,
            Err(e @ Error::SimulationBlowup { .. }) => {
                failures += 1;
                Some(e.to_string())
            }
            Err(e) => return Err(e),
        };
        w.write(&format!("trajectory_r{r:03}.csv"), &writer.into_inner())?;
        let mut meta = serde_json::to_value(TrajectoryMeta::new(&sim, seed, cfg.n_particles, every))?;
        meta["replicate"] = r.into();
        meta["failure"] = serde_json::to_value(&status)?;
        meta["config_sha256"] = cfg.hash().into();
        w.write_json(&format!("trajectory_r{r:03}.json"), &meta)?;
    }
    if failures == cfg.replicates {
        return Err(Error::Runtime(format!("all {failures} replicates blew up")));
    }
    Ok(())
}

fn estimate(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    if cfg.estimators.is_empty() {
        return Err(Error::validation("estimators", "estimate needs at least one estimator"));
    }
    let outcomes = run_replicates(cfg, cfg.n_particles, cfg.replicates)?;
    check_any_succeeded(&outcomes)?;
    let mut summary = String::from("replicate,seed,estimator_id,param,truth,initial,final,tail_mean,frozen,status\n");
    for o in &outcomes {
        if let Some(msg) = &o.failure {
            summary.push_str(&format!("{},{},,,,,,,,\"failed: {}\"\n", o.replicate, o.seed, msg.replace('"', "'")));
            continue;
        }
        let mut csv = String::from(ESTIMATE_CSV_HEADER);
        csv.push('\n');
        for e in &o.estimators {
            for rec in &e.history {
                for (name, v) in e.param_names.iter().zip(&rec.values) {
                    csv.push_str(&format!("{},{},{},{},{},{}\n", rec.step, rec.time, e.label, name, v, rec.frozen));
                }
            }
            for (a, name) in e.param_names.iter().enumerate() {
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},ok\n",
                    o.replicate, o.seed, e.label, name, e.truth[a], e.initial[a], e.final_value[a], e.tail_mean[a], e.frozen
                ));
            }
        }
        w.write(&format!("estimates_r{:03}.csv", o.replicate), csv.as_bytes())?;
    }
    w.write("summary.csv", summary.as_bytes())?;
    w.write_json("estimate.json", &run_metadata(cfg, Command::Estimate))?;
    Ok(())
}

fn diagnose(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let spec = cfg.diagnose.clone().ok_or_else(|| Error::validation("diagnose", "config has no diagnose section"))?;
    let mut meta = run_metadata(cfg, Command::Diagnose);
    if let Some(m) = &spec.moments {
        let mut tracker = MomentTracker::new(m.powers.clone(), m.alarm_level)?;
        let outcome = run_replicate(cfg, cfg.n_particles, 0, &mut [&mut tracker])?;
        let mut buf = Vec::new();
        tracker.write_csv(&mut buf, cfg.record_every)?;
        w.write("moments.csv", &buf)?;
        meta["moments"] = serde_json::json!({
            "reports": tracker.reports(),
            "alarm_step": tracker.alarm_step(),
            "failure": outcome.failure,
        });
    }
    if let Some(c) = &spec.coupling {
        let sim = simulation_spec(cfg)?;
        let rows = coupling_sweep(&sim, c, cfg.base_seed)?;
        let mut csv = String::from("n_small,n_big,mean_distance\n");
        for (n, v) in &rows {
            csv.push_str(&format!("{n},{},{v}\n", c.n_big));
        }
        w.write("coupling.csv", csv.as_bytes())?;
    }
    if let Some(c) = &spec.clt {
        let summary = clt_rescaled_moments(cfg, c, cfg.replicates)?;
        let mut buf = Vec::new();
        summary.write_csv(&mut buf)?;
        w.write("clt.csv", &buf)?;
        meta["clt_excluded"] = summary.excluded_count.into();
    }
    w.write_json("diagnose.json", &meta)?;
    Ok(())
}
