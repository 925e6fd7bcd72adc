use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gaugewave_cli::config::{self, ExperimentConfig, ExperimentKind, SCHEMA_VERSION};
use gaugewave_cli::errors::{RunError, EXIT_CONFIG, EXIT_INTERNAL, EXIT_OK};
use gaugewave_cli::output::{to_json, write_atomic, DIAGNOSTICS_SCHEMA};
use gaugewave_cli::validate;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "gaugewave", version, about = "Run wave-packet, gauge and detector experiments from a config file")]
struct Cli {
    /// TOML experiment config; built-in defaults fill anything it leaves out.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `measurement.seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write a matplotlib script per experiment.
    #[arg(long, global = true)]
    emit_plots: bool,
    /// Print diagnostics for the resolved config and exit.
    #[arg(long, global = true)]
    validate_only: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment named in the config (the default).
    Run,
    /// Same as `--validate-only`.
    Validate,
    /// Print the resolved config as TOML.
    ShowConfig,
    /// Functionals of the configured packet.
    PacketInfo,
    /// Exact free Klein-Gordon propagation.
    EvolveFree,
    /// Leapfrog Klein-Gordon evolution in the configured potential.
    EvolveKg,
    /// Split-step Schrodinger evolution in the configured potential.
    EvolveSchrodinger,
    /// Klein-Gordon against Schrodinger from the same initial samples.
    CompareLowEnergy,
    /// Gauge covariance, curvature and current-identity checks.
    GaugeAudit,
    /// Monte Carlo detection frequencies against bin probabilities.
    BornTrials,
    /// Monte Carlo detection force and momentum expectation.
    DetectionForce,
    /// Every experiment above, run concurrently.
    FullSuite,
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Run | Command::Validate | Command::ShowConfig => return None,
            Command::PacketInfo => ExperimentKind::PacketInfo,
            Command::EvolveFree => ExperimentKind::EvolveFree,
            Command::EvolveKg => ExperimentKind::EvolveKg,
            Command::EvolveSchrodinger => ExperimentKind::EvolveSchrodinger,
            Command::CompareLowEnergy => ExperimentKind::CompareLowEnergy,
            Command::GaugeAudit => ExperimentKind::GaugeAudit,
            Command::BornTrials => ExperimentKind::BornTrials,
            Command::DetectionForce => ExperimentKind::DetectionForce,
            Command::FullSuite => ExperimentKind::FullSuite,
        })
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn report_error(e: &RunError, experiment: Option<ExperimentKind>, dir: Option<&PathBuf>) -> i32 {
    let record = e.record(experiment);
    let text = serde_json::to_string(&record).expect("error records serialize");
    eprintln!("{text}");
    if let Some(dir) = dir {
        if !matches!(e, RunError::Output { .. }) {
            let _ = write_atomic(&dir.join("error.json"), &to_json(&record));
        }
    }
    e.exit_code()
}

fn load(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path).map_err(RunError::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = cli.command.as_ref().and_then(Command::kind) {
        cfg.experiment = kind;
    }
    if let Some(seed) = cli.seed {
        cfg.measurement.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if cli.emit_plots {
        cfg.output.plots = true;
    }
    Ok(cfg)
}

fn real_main() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => return Ok(report_error(&e, None, None)),
    };
    let resolved = validate::resolve(&cfg);
    match cli.command {
        Some(Command::ShowConfig) => {
            emit(&resolved.to_toml());
            return Ok(EXIT_OK);
        }
        Some(Command::Validate) => return validate_only(&resolved),
        _ if cli.validate_only => return validate_only(&resolved),
        _ => {}
    }
    match gaugewave_cli::execute(&resolved) {
        Ok(summary) => {
            for path in &summary.written {
                emit(&format!("{}\n", path.display()));
            }
            Ok(EXIT_OK)
        }
        Err(e) => Ok(report_error(&e, Some(resolved.experiment), Some(&resolved.output.dir))),
    }
}

fn validate_only(cfg: &ExperimentConfig) -> anyhow::Result<i32> {
    let diagnostics = validate::validate(cfg);
    let record = json!({
        "schema": DIAGNOSTICS_SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "diagnostics": diagnostics,
    });
    emit(&format!("{}\n", serde_json::to_string_pretty(&record).context("serializing diagnostics")?));
    Ok(match diagnostics.first() {
        None => EXIT_OK,
        Some(d) if d.exit_code == EXIT_OK => EXIT_CONFIG,
        Some(d) => d.exit_code,
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e:#}");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
