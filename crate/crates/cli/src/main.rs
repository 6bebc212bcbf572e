use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipsgd::estimators::validate_schedule;
use ipsgd::experiments::{load_config, run_experiment, Command, ExperimentConfig};
use ipsgd::models::model_catalog;
use ipsgd::Error;
use serde_json::{json, Value};

/// Online parameter estimation for interacting particle systems.
#[derive(Debug, Parser)]
#[command(name = "ipsgd", version, about)]
struct Cli {
    /// Print the model zoo as JSON and exit.
    #[arg(long, global = true)]
    list_models: bool,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Simulate trajectories only.
    Simulate(RunArgs),
    /// Simulate and run every configured estimator.
    Estimate(RunArgs),
    /// Mean squared error against particle count.
    Sweep(RunArgs),
    /// Time-averaged contrast on a parameter grid.
    Surface(RunArgs),
    /// Moment tracking, coupling distances and CLT moments.
    Diagnose(RunArgs),
    /// Check a config and report on its learning-rate schedules.
    Validate(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; defaults to out/<config name>.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the replicate count.
    #[arg(long, value_name = "INT")]
    replicates: Option<usize>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    body: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut body = json!({ "error": e.kind(), "message": e.to_string() });
        match &e {
            Error::Validation { field, .. } => body["field"] = json!(field),
            Error::Parse { line, column, .. } => {
                body["line"] = json!(line);
                body["column"] = json!(column);
            }
            _ => {}
        }
        Failure { code: if e.is_validation() { 2 } else { 1 }, body }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&args.config).map_err(|e| {
        // an unreadable config is the caller's mistake, not a runtime failure
        let mut f = Failure::from(e);
        f.code = 2;
        f.body["config"] = json!(args.config.display().to_string());
        f
    })?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn validate_report(cfg: &ExperimentConfig) -> Result<Value, Failure> {
    let mut schedules = Vec::new();
    for est in &cfg.estimators {
        let report = validate_schedule(&est.schedule)?;
        schedules.push(json!({ "estimator": est.label(), "report": report }));
    }
    Ok(json!({
        "name": cfg.name,
        "model": cfg.model,
        "config_sha256": cfg.hash(),
        "valid": true,
        "schedules": schedules,
    }))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    if cli.list_models {
        return Ok(serde_json::to_value(model_catalog()).expect("catalog serializes"));
    }
    let Some(sub) = cli.command else {
        return Err(Failure {
            code: 2,
            body: json!({ "error": "usage", "message": "a subcommand or --list-models is required" }),
        });
    };
    let (command, args) = match &sub {
        Sub::Simulate(a) => (Some(Command::Simulate), a),
        Sub::Estimate(a) => (Some(Command::Estimate), a),
        Sub::Sweep(a) => (Some(Command::Sweep), a),
        Sub::Surface(a) => (Some(Command::Surface), a),
        Sub::Diagnose(a) => (Some(Command::Diagnose), a),
        Sub::Validate(a) => (None, a),
    };
    let cfg = load(args)?;
    let Some(command) = command else {
        return validate_report(&cfg);
    };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let manifest = run_experiment(&cfg, command, &out)?;
    Ok(json!({ "out": out.display().to_string(), "manifest": manifest }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({ "error": "usage", "message": e.to_string().trim_end() });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}
