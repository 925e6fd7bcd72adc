//! Result envelopes and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, SCHEMA_VERSION};
use crate::errors::RunError;

pub const RESULT_SCHEMA: &str = "gaugewave/result";
pub const SUITE_SCHEMA: &str = "gaugewave/suite";
pub const DIAGNOSTICS_SCHEMA: &str = "gaugewave/diagnostics";

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    let fail = |error| RunError::Output {
        path: path.to_path_buf(),
        error,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn envelope(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    result: Value,
    artifacts: &[String],
    passed: Option<bool>,
) -> Value {
    json!({
        "schema": RESULT_SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "tool": { "name": "gaugewave", "version": env!("CARGO_PKG_VERSION") },
        "experiment": kind,
        "config": config,
        "artifacts": artifacts,
        "passed": passed,
        "result": result,
    })
}

pub fn result_path(dir: &Path, kind: ExperimentKind) -> PathBuf {
    dir.join(format!("{kind}.json"))
}

pub fn artifact_name(kind: ExperimentKind, suffix: &str) -> String {
    format!("{kind}.{suffix}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/a.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        let leftovers = std::fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn envelope_embeds_config_and_version() {
        let cfg = ExperimentConfig::default();
        let v = envelope(ExperimentKind::PacketInfo, &cfg, json!({"x": 1}), &[], None);
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["experiment"], "packet-info");
        let back: ExperimentConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(back, cfg);
    }
}
