//! Up-front checks that report every problem without running anything.

use gaugewave::evolution::{default_dt, stability_bound, MAX_LOW_ENERGY_RATIO};
use gaugewave::measurement::{bin_probabilities, DetectorArray};
use gaugewave::noether::noether_momentum;
use gaugewave::{EMPotential, Error, KGrid, MomentumPacket};
use serde::Serialize;

use crate::config::{BinningKind, ExperimentConfig, ExperimentKind, MeasurementConfig};
use crate::errors::{module_code, EXIT_CONFIG};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    /// Dotted path of the offending config key.
    pub field: String,
    pub code: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl Diagnostic {
    fn module(field: &str, e: &Error) -> Self {
        let (code, exit_code) = module_code(e);
        Diagnostic {
            field: field.into(),
            code,
            exit_code,
            message: e.to_string(),
        }
    }

    fn config(field: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.into(),
            code: "ConfigInvalid",
            exit_code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

/// Detector layout selected by the measurement settings.
pub fn detector_array(m: &MeasurementConfig, grid: &KGrid) -> gaugewave::Result<DetectorArray> {
    match (m.binning, grid.dim()) {
        (BinningKind::SolidAngle, _) | (BinningKind::Auto, 3) => DetectorArray::solid_angle(grid, m.bins),
        _ => match &m.edges {
            Some(edges) => DetectorArray::intervals(grid, edges.clone()),
            None => DetectorArray::uniform_intervals(grid, m.bins),
        },
    }
}

/// Fills in defaults that depend on the physics: the step size.
pub fn resolve(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut out = cfg.clone();
    if out.solver.dt.is_none() {
        if let Ok(em) = cfg.potential.build(&cfg.packet.grid, &cfg.constants) {
            out.solver.dt = Some(default_dt(&em, &cfg.constants, cfg.solver.frame));
        }
    }
    out
}

fn has_vector_potential(em: &EMPotential) -> bool {
    (0..em.grid().dim()).any(|a| em.vector(a).iter().any(|v| *v != 0.0))
}

fn positive(d: &mut Vec<Diagnostic>, field: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        d.push(Diagnostic::config(field, format!("must be positive and finite, got {v}")));
    }
}

fn check_measurement(cfg: &ExperimentConfig, packet: Option<&MomentumPacket>, kind: ExperimentKind, d: &mut Vec<Diagnostic>) {
    let m = &cfg.measurement;
    if m.trials == 0 {
        d.push(Diagnostic::config("measurement.trials", "need at least one trial"));
    }
    if m.bins == 0 && m.edges.is_none() {
        d.push(Diagnostic::config("measurement.bins", "need at least one bin"));
    }
    match detector_array(m, &cfg.packet.grid) {
        Err(e) => d.push(Diagnostic::module("measurement.binning", &e)),
        Ok(array) => {
            if let Some(p) = packet {
                if let Err(e) = bin_probabilities(p, &array) {
                    d.push(Diagnostic::module("measurement.binning", &e));
                }
            }
        }
    }
    if kind == ExperimentKind::DetectionForce && cfg.packet.grid.dim() == 1 {
        if m.refinement.len() == 1 {
            d.push(Diagnostic::config("measurement.refinement", "a refinement study needs at least two bin counts"));
        }
        if m.refinement.contains(&0) {
            d.push(Diagnostic::config("measurement.refinement", "bin counts must be positive"));
        }
    }
}

fn check_kind(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    packet: Option<&MomentumPacket>,
    em: Option<&EMPotential>,
    d: &mut Vec<Diagnostic>,
) {
    let s = &cfg.solver;
    match kind {
        ExperimentKind::PacketInfo | ExperimentKind::FullSuite => {}
        ExperimentKind::EvolveFree => positive(d, "solver.horizon", s.horizon),
        ExperimentKind::EvolveKg | ExperimentKind::EvolveSchrodinger => {
            if s.steps == 0 {
                d.push(Diagnostic::config("solver.steps", "need at least one step"));
            }
            let Some(em) = em else { return };
            match kind {
                ExperimentKind::EvolveKg => {
                    if has_vector_potential(em) {
                        d.push(Diagnostic::module("potential", &Error::NonzeroVectorPotential));
                    }
                    if let Some(dt) = s.dt {
                        let bound = stability_bound(em, &cfg.constants, s.frame);
                        if !(dt.is_finite() && dt != 0.0) {
                            d.push(Diagnostic::config("solver.dt", format!("must be finite and nonzero, got {dt}")));
                        } else if dt.abs() > bound {
                            d.push(Diagnostic::module("solver.dt", &Error::UnstableStep { dt, bound }));
                        }
                    }
                }
                _ => {
                    if em.uniform_vector_value().is_none() {
                        d.push(Diagnostic::module("potential", &Error::NonuniformVectorPotential));
                    }
                    if let Some(dt) = s.dt {
                        if !(dt.is_finite() && dt != 0.0) {
                            d.push(Diagnostic::config("solver.dt", format!("must be finite and nonzero, got {dt}")));
                        }
                    }
                }
            }
        }
        ExperimentKind::CompareLowEnergy => {
            positive(d, "solver.horizon", s.horizon);
            if let Some(dt) = s.dt {
                positive(d, "solver.dt", dt);
            }
            if let Some(em) = em {
                if has_vector_potential(em) {
                    d.push(Diagnostic::module("potential", &Error::NonzeroVectorPotential));
                }
                if let Some(dt) = s.dt {
                    let bound = stability_bound(em, &cfg.constants, Default::default());
                    if dt > bound {
                        d.push(Diagnostic::module("solver.dt", &Error::UnstableStep { dt, bound }));
                    }
                }
            }
            if let Some(p) = packet {
                let k = p.constants();
                let momentum = noether_momentum(p);
                let spatial = momentum.spatial().iter().map(|v| v * v).sum::<f64>().sqrt();
                let ratio = spatial / (k.m * k.c);
                if ratio > MAX_LOW_ENERGY_RATIO {
                    d.push(Diagnostic::module(
                        "packet.profile",
                        &Error::TooRelativistic {
                            ratio,
                            limit: MAX_LOW_ENERGY_RATIO,
                        },
                    ));
                }
            }
        }
        ExperimentKind::GaugeAudit => {
            let g = &cfg.gauge;
            if g.modes == 0 {
                d.push(Diagnostic::config("gauge.modes", "need at least one mode"));
            }
            if g.draws == 0 {
                d.push(Diagnostic::config("gauge.draws", "need at least one draw"));
            }
            if !(g.amplitude.is_finite() && g.amplitude >= 0.0) {
                d.push(Diagnostic::config("gauge.amplitude", "must be finite and non-negative"));
            }
            positive(d, "gauge.epsilon", g.epsilon);
            positive(d, "gauge.tolerance", g.tolerance);
        }
        ExperimentKind::BornTrials | ExperimentKind::DetectionForce => check_measurement(cfg, packet, kind, d),
    }
}

/// Every problem with `cfg`, in a stable order. Empty means the run can start.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    let packet = match cfg.packet_spec().build() {
        Ok(p) => Some(p),
        Err(e) => {
            d.push(Diagnostic::module("packet", &e));
            None
        }
    };
    let em = match cfg.potential.build(&cfg.packet.grid, &cfg.constants) {
        Ok(em) => Some(em),
        Err(e) => {
            d.push(Diagnostic::module("potential", &e));
            None
        }
    };
    let kinds: Vec<ExperimentKind> = if cfg.experiment == ExperimentKind::FullSuite {
        ExperimentKind::SUITE.to_vec()
    } else {
        vec![cfg.experiment]
    };
    for kind in kinds {
        check_kind(cfg, kind, packet.as_ref(), em.as_ref(), &mut d);
    }
    let mut seen = Vec::new();
    d.retain(|x| {
        let key = (x.field.clone(), x.message.clone());
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    d
}
