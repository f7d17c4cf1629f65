#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Command-line driver: runs each stage from a JSON config and writes CSV
//! artifacts plus a `report.json` into the output directory.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ Parser, Subcommand };
use serde_json::json;

use commands::Run;
use config::{ scenario, ConfigError, RunConfig };

#[derive(Parser)]
#[command(name = "cmera", version, about = "Continuous MERA for the Chern insulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario in the config.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the entanglement flow and check it against the analytic state.
    Flow(Common),
    /// Chern number of the state family at several scales.
    Chern(Common),
    /// Real-space disentangler kernel and decay-length fits.
    Kernel(Common),
    /// Five-level laser scheme: structure, mapping and full-model oracle.
    Scheme(Common),
    /// Momentum-addressed state preparation on a finite lattice.
    Irprep(Common),
    /// Run every acceptance criterion.
    Repro(Common),
}

enum Failure {
    Config(ConfigError),
    Runtime(cmera::error::Error),
}

fn load(common: &Common, command: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(name) = &common.scenario {
        cfg.scenario = name.clone();
    }
    cfg.acceptance.seed = cfg.seed;
    cfg.validate()?;
    let sc = scenario(&cfg.scenario).expect("validated");
    if sc.command != "*" && sc.command != command && command != "repro" {
        return Err(ConfigError::new(
            "scenario",
            format!("scenario `{}` belongs to the `{}` command", sc.name, sc.command),
        ));
    }
    Ok(cfg)
}

fn execute(command: &str, common: &Common) -> Result<bool, Failure> {
    let cfg = load(common, command).map_err(Failure::Config)?;
    let sc = scenario(&cfg.scenario).expect("validated");
    let mut run = Run::new(&common.out).map_err(Failure::Runtime)?;
    let criteria: Vec<u8> = if command == "repro" {
        sc.criteria.to_vec()
    } else {
        sc.criteria.iter().copied().filter(|&id| owner(id) == command).collect()
    };
    let result = match command {
        "flow" => commands::flow(&mut run, &cfg),
        "chern" => commands::chern(&mut run, &cfg),
        "kernel" => commands::kernel(&mut run, &cfg),
        "scheme" => commands::scheme(&mut run, &cfg),
        "irprep" => commands::irprep(&mut run, &cfg),
        _ => Ok(()),
    };
    result.map_err(Failure::Runtime)?;
    run.criteria(&criteria, &cfg);
    if command == "repro" {
        commands::repro(&mut run).map_err(Failure::Runtime)?;
    }
    for c in &run.checks {
        println!("{} {}: {:.3e} (limit {:.3e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    run.finish(command, &cfg).map_err(Failure::Runtime)?;
    Ok(run.pass())
}

/// Subcommand that owns a criterion outside the default scenario.
fn owner(id: u8) -> &'static str {
    config::SCENARIOS
        .iter()
        .find(|s| s.command != "*" && s.criteria.contains(&id))
        .map_or("repro", |s| s.command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Flow(c) => ("flow", c),
        Command::Chern(c) => ("chern", c),
        Command::Kernel(c) => ("kernel", c),
        Command::Scheme(c) => ("scheme", c),
        Command::Irprep(c) => ("irprep", c),
        Command::Repro(c) => ("repro", c),
    };
    match execute(name, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", json!({ "error": "tolerance", "message": "one or more checks failed; see report.json" }));
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("{}", json!({ "error": "config", "field": e.field, "message": e.reason }));
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("{}", json!({ "error": "runtime", "message": e.to_string() }));
            ExitCode::from(3)
        }
    }
}
