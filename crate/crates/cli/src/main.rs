//! `concept`: concept-level completion, is-a probes and evaluation from the
//! command line. Every command writes JSON/CSV into `--out` together with
//! the resolved configuration; failures print a JSON error to stderr.

mod commands;
mod config;
mod connect;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use commands::{complete, eval, fixtures, probe};
use concept_core::backend::FixtureMode;
use config::{Overrides, RunConfig};
use output::OutputSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Record,
    Replay,
    Passthrough,
}

impl From<ModeArg> for FixtureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Record => FixtureMode::Record,
            ModeArg::Replay => FixtureMode::Replay,
            ModeArg::Passthrough => FixtureMode::Passthrough,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "concept",
    version,
    about = "Concept-level completion, is-a probing and evaluation"
)]
struct Cli {
    /// TOML file mirroring the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base URL of a /v1 backend. The bearer token is read from CONCEPT_BEARER_TOKEN.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Fixture store file.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    mode: Option<ModeArg>,
    /// Completions fetched per sentence.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    cut_threshold: Option<f64>,
    #[arg(long, global = true)]
    perplexity: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ranked concepts for a masked sentence.
    Complete(complete::CompleteArgs),
    /// Is-a probes over an ontology.
    Probe(probe::ProbeArgs),
    /// Scores against human annotations.
    Eval(eval::EvalArgs),
    /// Fixture store maintenance.
    Fixtures(fixtures::FixturesArgs),
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            backend: self.backend.clone(),
            fixtures: self.fixtures.clone(),
            mode: self.mode.map(Into::into),
            k: self.k,
            alpha: self.alpha,
            cut_threshold: self.cut_threshold,
            perplexity: self.perplexity,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(cli.overrides());
    match &cli.command {
        Command::Probe(a) => a.apply(&mut cfg),
        Command::Eval(a) => a.apply(&mut cfg),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Value> {
    let cfg = resolve(cli)?;
    let mut out = OutputSet::default();
    let summary = match &cli.command {
        Command::Complete(a) => complete::run(&cfg, a, &mut out)?,
        Command::Probe(a) => probe::run(&cfg, a, &mut out)?,
        Command::Eval(a) => eval::run(&cfg, a, &mut out)?,
        Command::Fixtures(a) => return fixtures::run(&cfg, a),
    };
    out.add("config.toml", cfg.to_toml()?);
    let written = out.commit(&cfg.out)?;
    Ok(json!({ "summary": summary, "files": written }))
}

fn error_document(err: &anyhow::Error) -> Value {
    let kind = err
        .downcast_ref::<concept_core::Error>()
        .map(|e| e.kind())
        .unwrap_or("error");
    let chain: Vec<String> = err.chain().skip(1).map(|c| c.to_string()).collect();
    json!({ "error": { "kind": kind, "message": err.to_string(), "causes": chain } })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => {
            // a closed pipe on stdout is not a failure of the run
            let _ = writeln!(
                std::io::stdout(),
                "{}",
                serde_json::to_string_pretty(&v).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&error_document(&e)).expect("error serializes")
            );
            ExitCode::FAILURE
        }
    }
}
