//! Exit codes and machine-readable error records.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::{ConfigError, ExperimentKind, SCHEMA_VERSION};
use crate::validate::Diagnostic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_OUTPUT: i32 = 4;
/// The run completed but one of its statistical or numerical checks failed.
pub const EXIT_CHECK_FAILED: i32 = 6;

/// Stable name and exit code for each library error.
pub fn module_code(e: &gaugewave::Error) -> (&'static str, i32) {
    use gaugewave::Error::*;
    match e {
        InvalidConstants(_) => ("InvalidConstants", 10),
        InvalidGrid(_) => ("InvalidGrid", 11),
        InvalidArgument(_) => ("InvalidArgument", 12),
        GridTooNarrow(_) => ("GridTooNarrow", 13),
        BoundaryLeakage { .. } => ("BoundaryLeakage", 14),
        ZeroWeight => ("ZeroWeight", 15),
        ZeroNorm => ("ZeroNorm", 16),
        MissingPacket { .. } => ("MissingPacket", 17),
        DimensionMismatch { .. } => ("DimensionMismatch", 18),
        Delocalized { .. } => ("Delocalized", 19),
        GridMismatch => ("GridMismatch", 20),
        RoughLambda { .. } => ("RoughLambda", 21),
        RoughPotential { .. } => ("RoughPotential", 22),
        UnstableStep { .. } => ("UnstableStep", 23),
        NonzeroVectorPotential => ("NonzeroVectorPotential", 24),
        NonuniformVectorPotential => ("NonuniformVectorPotential", 25),
        TooRelativistic { .. } => ("TooRelativistic", 26),
        PartitionGap { .. } => ("PartitionGap", 27),
        ZeroBin { .. } => ("ZeroBin", 28),
        InvalidBin { .. } => ("InvalidBin", 29),
        Io(_) => ("Io", 30),
        Parse(_) => ("Parse", 31),
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// Validation found problems before anything ran.
    Invalid(Vec<Diagnostic>),
    Module {
        experiment: ExperimentKind,
        error: gaugewave::Error,
    },
    Output {
        path: PathBuf,
        error: std::io::Error,
    },
    /// Names of the experiments whose checks failed.
    CheckFailed(Vec<ExperimentKind>),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Invalid(d) => d.first().map_or(EXIT_CONFIG, |d| d.exit_code),
            RunError::Module { error, .. } => module_code(error).1,
            RunError::Output { .. } => EXIT_OUTPUT,
            RunError::CheckFailed(_) => EXIT_CHECK_FAILED,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "ConfigInvalid",
            RunError::Invalid(d) => d.first().map_or("ConfigInvalid", |d| d.code),
            RunError::Module { error, .. } => module_code(error).0,
            RunError::Output { .. } => "OutputFailed",
            RunError::CheckFailed(_) => "CheckFailed",
        }
    }

    pub fn record(&self, experiment: Option<ExperimentKind>) -> ErrorRecord {
        let (field, diagnostics) = match self {
            RunError::Config(e) => (e.field.clone(), Vec::new()),
            RunError::Invalid(d) => (d.first().map(|d| d.field.clone()), d.clone()),
            _ => (None, Vec::new()),
        };
        let experiment = match self {
            RunError::Module { experiment, .. } => Some(*experiment),
            _ => experiment,
        };
        ErrorRecord {
            schema: "gaugewave/error",
            schema_version: SCHEMA_VERSION,
            experiment,
            kind: self.kind(),
            exit_code: self.exit_code(),
            field,
            message: self.to_string(),
            diagnostics,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Invalid(d) => {
                write!(f, "{} validation problem(s)", d.len())?;
                if let Some(first) = d.first() {
                    write!(f, "; first at {}: {}", first.field, first.message)?;
                }
                Ok(())
            }
            RunError::Module { experiment, error } => write!(f, "{experiment}: {error}"),
            RunError::Output { path, error } => write!(f, "writing {}: {error}", path.display()),
            RunError::CheckFailed(kinds) => {
                let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
                write!(f, "checks failed in {}", names.join(", "))
            }
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub schema: &'static str,
    pub schema_version: u32,
    pub experiment: Option<ExperimentKind>,
    pub kind: &'static str,
    pub exit_code: i32,
    pub field: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_codes_are_distinct() {
        use gaugewave::Error::*;
        let all = [
            InvalidConstants(String::new()),
            InvalidGrid(String::new()),
            InvalidArgument(String::new()),
            GridTooNarrow(String::new()),
            BoundaryLeakage { max_amplitude: 0.0, margin: 0, tolerance: 0.0 },
            ZeroWeight,
            ZeroNorm,
            MissingPacket { order: 1 },
            DimensionMismatch { expected: 3, found: 1 },
            Delocalized { max_amplitude: 0.0 },
            GridMismatch,
            RoughLambda { fraction: 0.0 },
            RoughPotential { fraction: 0.0 },
            UnstableStep { dt: 0.0, bound: 0.0 },
            NonzeroVectorPotential,
            NonuniformVectorPotential,
            TooRelativistic { ratio: 0.0, limit: 0.0 },
            PartitionGap { node: 0 },
            ZeroBin { bin: 0 },
            InvalidBin { bin: 0, bins: 0 },
            Io(String::new()),
            Parse(String::new()),
        ];
        let mut codes: Vec<i32> = all.iter().map(|e| module_code(e).1).collect();
        codes.extend([EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_CONFIG, EXIT_OUTPUT, EXIT_CHECK_FAILED]);
        let n = codes.len();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), n);
    }
}
