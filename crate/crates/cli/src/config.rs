//! Experiment configuration: TOML files with optional `include` lists,
//! merged onto built-in defaults.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gaugewave::evolution::KgFrame;
use gaugewave::packet::Profile;
use gaugewave::{KGrid, PacketSpec, PhysicalConstants, PotentialSpec};
use serde::{Deserialize, Serialize};

/// Version of the config layout and of every record the runner writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PacketInfo,
    EvolveFree,
    EvolveKg,
    EvolveSchrodinger,
    CompareLowEnergy,
    GaugeAudit,
    BornTrials,
    DetectionForce,
    FullSuite,
}

impl ExperimentKind {
    /// Members of `full-suite`, in the order they are reported.
    pub const SUITE: [ExperimentKind; 8] = [
        ExperimentKind::PacketInfo,
        ExperimentKind::EvolveFree,
        ExperimentKind::EvolveKg,
        ExperimentKind::EvolveSchrodinger,
        ExperimentKind::CompareLowEnergy,
        ExperimentKind::GaugeAudit,
        ExperimentKind::BornTrials,
        ExperimentKind::DetectionForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PacketInfo => "packet-info",
            ExperimentKind::EvolveFree => "evolve-free",
            ExperimentKind::EvolveKg => "evolve-kg",
            ExperimentKind::EvolveSchrodinger => "evolve-schrodinger",
            ExperimentKind::CompareLowEnergy => "compare-low-energy",
            ExperimentKind::GaugeAudit => "gauge-audit",
            ExperimentKind::BornTrials => "born-trials",
            ExperimentKind::DetectionForce => "detection-force",
            ExperimentKind::FullSuite => "full-suite",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub grid: KGrid,
    pub profile: Profile,
}

impl Default for PacketConfig {
    fn default() -> Self {
        PacketConfig {
            grid: KGrid::one_d(512, 0.0025, 0.2).expect("valid default grid"),
            profile: Profile::Gaussian {
                k0: [0.2, 0.0, 0.0],
                delta_k: 0.02,
                x0: [0.0; 3],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Time step; resolved to the Klein-Gordon default step when absent.
    pub dt: Option<f64>,
    pub steps: usize,
    /// Final time for `evolve-free` and `compare-low-energy`.
    pub horizon: f64,
    pub frame: KgFrame,
    /// Report samples after the initial one.
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: None,
            steps: 2000,
            horizon: 500.0,
            frame: KgFrame::RestMass,
            samples: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinningKind {
    /// Solid-angle tiles on 3D grids, equal-width intervals on 1D grids.
    #[default]
    Auto,
    Intervals,
    SolidAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub binning: BinningKind,
    pub bins: usize,
    /// Explicit interval edges for 1D `intervals` binning.
    pub edges: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
    /// Stream every trial to a columnar file.
    pub write_trials: bool,
    /// Interval counts for the detection-force refinement study (1D only).
    pub refinement: Vec<usize>,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            binning: BinningKind::Auto,
            bins: 8,
            edges: None,
            trials: 100_000,
            seed: 1,
            write_trials: false,
            refinement: vec![32, 64, 128, 256],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeConfig {
    /// Number of random Fourier modes in each gauge function.
    pub modes: usize,
    /// Largest mode amplitude of the gauge function.
    pub amplitude: f64,
    /// Highest harmonic of the position box used per axis.
    pub max_harmonic: u32,
    /// Gauge functions drawn per audit.
    pub draws: usize,
    /// Finite-difference step of the current identity.
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            modes: 6,
            amplitude: 0.15,
            max_harmonic: 2,
            draws: 4,
            epsilon: 1e-5,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            plots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub constants: PhysicalConstants,
    pub packet: PacketConfig,
    pub potential: PotentialSpec,
    pub solver: SolverConfig,
    pub measurement: MeasurementConfig,
    pub gauge: GaugeConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: ExperimentKind::PacketInfo,
            constants: PhysicalConstants::default(),
            packet: PacketConfig::default(),
            potential: PotentialSpec::Zero,
            solver: SolverConfig::default(),
            measurement: MeasurementConfig::default(),
            gauge: GaugeConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn packet_spec(&self) -> PacketSpec {
        PacketSpec {
            grid: self.packet.grid,
            profile: self.packet.profile.clone(),
            constants: self.constants,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Malformed config input, located by file and key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}: ", file.display())?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(file: &Path, field: Option<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        file: Some(file.to_path_buf()),
        field,
        message: message.into(),
    }
}

/// Later tables win key by key; non-table values replace wholesale.
pub fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn load_table(path: &Path, stack: &mut BTreeSet<PathBuf>) -> Result<toml::Table, ConfigError> {
    let canonical = path
        .canonicalize()
        .map_err(|e| config_error(path, None, format!("cannot open: {e}")))?;
    if !stack.insert(canonical.clone()) {
        return Err(config_error(path, Some("include".into()), "include cycle"));
    }
    let text = std::fs::read_to_string(path).map_err(|e| config_error(path, None, format!("cannot read: {e}")))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| config_error(path, None, e.message().to_string()))?;
    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(toml::Value::Array(items)) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                toml::Value::String(s) => Ok(PathBuf::from(s)),
                _ => Err(config_error(path, Some(format!("include[{i}]")), "expected a path string")),
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(toml::Value::String(s)) => vec![PathBuf::from(s)],
        Some(_) => return Err(config_error(path, Some("include".into()), "expected a path or a list of paths")),
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut merged = toml::Table::new();
    for inc in includes {
        let inc = if inc.is_absolute() { inc } else { dir.join(inc) };
        merge(&mut merged, load_table(&inc, stack)?);
    }
    merge(&mut merged, table);
    stack.remove(&canonical);
    Ok(merged)
}

/// Reads a config file, resolving includes relative to the including file.
pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let table = load_table(path, &mut BTreeSet::new())?;
    from_table(table, Some(path))
}

pub fn from_table(table: toml::Table, file: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let mut base = match toml::Value::try_from(ExperimentConfig::default()) {
        Ok(toml::Value::Table(t)) => t,
        _ => unreachable!("defaults serialize to a table"),
    };
    // tagged enums are replaced as a whole rather than merged field by field
    for key in ["potential"] {
        if table.contains_key(key) {
            base.remove(key);
        }
    }
    if let Some(toml::Value::Table(packet)) = table.get("packet") {
        if packet.contains_key("profile") {
            if let Some(toml::Value::Table(p)) = base.get_mut("packet") {
                p.remove("profile");
            }
        }
        if packet.contains_key("grid") {
            if let Some(toml::Value::Table(p)) = base.get_mut("packet") {
                p.remove("grid");
            }
        }
    }
    merge(&mut base, table);
    let text = toml::to_string(&base).map_err(|e| ConfigError {
        file: file.map(Path::to_path_buf),
        field: None,
        message: e.to_string(),
    })?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Deserializer::new(&text)).map_err(|e| {
        let path = e.path().to_string();
        ConfigError {
            file: file.map(Path::to_path_buf),
            field: (path != ".").then_some(path),
            message: e.into_inner().message().trim().to_string(),
        }
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError {
            file: file.map(Path::to_path_buf),
            field: Some("schema_version".into()),
            message: format!("unsupported schema version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        });
    }
    Ok(cfg)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        file: None,
        field: None,
        message: e.message().to_string(),
    })?;
    from_table(table, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(parse(&cfg.to_toml()).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
    }

    #[test]
    fn partial_tables_keep_defaults() {
        let cfg = parse("experiment = \"born-trials\"\n[measurement]\ntrials = 10\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::BornTrials);
        assert_eq!(cfg.measurement.trials, 10);
        assert_eq!(cfg.measurement.bins, 8);
        assert_eq!(cfg.solver, SolverConfig::default());
    }

    #[test]
    fn tagged_sections_replace_defaults() {
        let cfg = parse("[potential]\nkind = \"harmonic\"\nomega = 0.1\n[packet.profile]\nkind = \"plane-wave\"\nk = [0.1, 0, 0]\n")
            .unwrap();
        assert_eq!(cfg.potential, PotentialSpec::Harmonic { omega: 0.1, window: 0.6 });
        assert_eq!(cfg.packet.profile, Profile::PlaneWave { k: [0.1, 0.0, 0.0] });
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let err = parse("[solver]\nstep = 3\n").unwrap_err();
        assert!(err.message.contains("step"), "{err}");
        let err = parse("[packet.grid]\ndim = 2\npoints = 64\nspacing = 0.1\n").unwrap_err();
        assert_eq!(err.field.as_deref(), Some("packet.grid"), "{err}");
        assert!(parse("[constants]\nhbar = -1.0\nc = 1.0\nm = 1.0\nq = -1.0\n").is_err());
        assert!(parse("schema_version = 7\n").is_err());
    }

    #[test]
    fn includes_merge_in_order() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.toml"), "[measurement]\ntrials = 5\nseed = 3\n").unwrap();
        std::fs::write(
            dir.path().join("main.toml"),
            "include = [\"base.toml\"]\nexperiment = \"detection-force\"\n[measurement]\nseed = 9\n",
        )
        .unwrap();
        let cfg = load(&dir.path().join("main.toml")).unwrap();
        assert_eq!(cfg.measurement.trials, 5);
        assert_eq!(cfg.measurement.seed, 9);
        assert_eq!(cfg.experiment, ExperimentKind::DetectionForce);
    }

    #[test]
    fn include_cycles_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.toml"), "include = \"b.toml\"\n").unwrap();
        std::fs::write(dir.path().join("b.toml"), "include = \"a.toml\"\n").unwrap();
        let err = load(&dir.path().join("a.toml")).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("include"));
    }
}
