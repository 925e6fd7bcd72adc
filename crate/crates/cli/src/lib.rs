//! Config-driven experiment runner for the gaugewave toolkit.
//!
//! A run resolves the config, validates it, executes one experiment (or the
//! whole suite, fanned out over worker threads) and writes a schema-versioned
//! JSON record per experiment that embeds the resolved config.

pub mod config;
pub mod errors;
pub mod experiments;
pub mod output;
pub mod plots;
pub mod validate;

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use config::{ExperimentConfig, ExperimentKind, SCHEMA_VERSION};
use errors::{module_code, RunError};
use experiments::Outcome;
use output::{artifact_name, envelope, result_path, to_json, write_atomic, SUITE_SCHEMA};

/// Paths written by a successful run, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub written: Vec<PathBuf>,
    pub passed: Option<bool>,
}

fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome, written: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let dir = &cfg.output.dir;
    let mut artifacts: Vec<String> = Vec::new();
    for (suffix, bytes) in &outcome.files {
        let name = artifact_name(outcome.kind, suffix);
        let path = dir.join(&name);
        write_atomic(&path, bytes)?;
        written.push(path);
        artifacts.push(name);
    }
    if cfg.output.plots {
        if let Some(script) = plots::script(outcome.kind) {
            let name = artifact_name(outcome.kind, "plot.py");
            let path = dir.join(&name);
            write_atomic(&path, script.as_bytes())?;
            written.push(path);
            artifacts.push(name);
        }
    }
    artifacts.sort();
    let record = envelope(outcome.kind, cfg, outcome.result.clone(), &artifacts, outcome.passed);
    let path = result_path(dir, outcome.kind);
    write_atomic(&path, &to_json(&record))?;
    written.push(path);
    Ok(())
}

/// Validates and runs `cfg`, writing results under `cfg.output.dir`.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let cfg = validate::resolve(cfg);
    let diagnostics = validate::validate(&cfg);
    if !diagnostics.is_empty() {
        return Err(RunError::Invalid(diagnostics));
    }
    // a stale failure record would contradict this run
    let stale = cfg.output.dir.join("error.json");
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|error| RunError::Output { path: stale, error })?;
    }
    let mut written = Vec::new();
    if cfg.experiment != ExperimentKind::FullSuite {
        let outcome = experiments::run(&cfg, cfg.experiment).map_err(|error| RunError::Module {
            experiment: cfg.experiment,
            error,
        })?;
        write_outcome(&cfg, &outcome, &mut written)?;
        return match outcome.passed {
            Some(false) => Err(RunError::CheckFailed(vec![outcome.kind])),
            passed => Ok(RunSummary { written, passed }),
        };
    }

    let results: Vec<(ExperimentKind, gaugewave::Result<Outcome>)> = ExperimentKind::SUITE
        .par_iter()
        .map(|&kind| (kind, experiments::run(&cfg, kind)))
        .collect();
    let mut members = Vec::new();
    let mut first_error = None;
    let mut failed_checks = Vec::new();
    for (kind, result) in results {
        match result {
            Ok(outcome) => {
                write_outcome(&cfg, &outcome, &mut written)?;
                if outcome.passed == Some(false) {
                    failed_checks.push(kind);
                }
                members.push(json!({
                    "experiment": kind,
                    "status": "ok",
                    "passed": outcome.passed,
                    "record": format!("{kind}.json"),
                }));
            }
            Err(error) => {
                let (code, exit_code) = module_code(&error);
                members.push(json!({
                    "experiment": kind,
                    "status": "error",
                    "error": { "kind": code, "exit_code": exit_code, "message": error.to_string() },
                }));
                first_error.get_or_insert(RunError::Module { experiment: kind, error });
            }
        }
    }
    let all_passed = first_error.is_none() && failed_checks.is_empty();
    let record = json!({
        "schema": SUITE_SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "tool": { "name": "gaugewave", "version": env!("CARGO_PKG_VERSION") },
        "experiment": ExperimentKind::FullSuite,
        "config": cfg,
        "passed": all_passed,
        "members": members,
    });
    let path = result_path(&cfg.output.dir, ExperimentKind::FullSuite);
    write_atomic(&path, &to_json(&record))?;
    written.push(path);
    if let Some(e) = first_error {
        return Err(e);
    }
    if !failed_checks.is_empty() {
        return Err(RunError::CheckFailed(failed_checks));
    }
    Ok(RunSummary {
        written,
        passed: Some(true),
    })
}
