//! One function per experiment kind. Each returns a JSON result plus any
//! side files; nothing here touches the filesystem.

use std::f64::consts::PI;

use gaugewave::evolution::{
    compare_low_energy, evolve_free_kg, evolve_kg_with, evolve_schrodinger_with, position_width, EvolutionReport,
    KGState, KgOptions, ReportParams,
};
use gaugewave::gauge::{
    bianchi_residual, coupled_charge, coupled_momentum, covariant_derivative, current_identity_check, curvature,
    gauge_transform, gaussian_bump,
};
use gaugewave::measurement::{
    born_rule_check, detection_force_trials, expectation_vs_noether, refinement_study,
};
use gaugewave::noether::{braket_kg, field_charge, field_momentum, functional_report, position_expectation};
use gaugewave::packet::{export_amplitudes, synthesize, synthesize_low_energy};
use gaugewave::{EMPotential, KGrid, MomentumPacket, OperatorSpec, Result, C64};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::validate::detector_array;

/// Result of a single experiment before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub result: Value,
    /// `(suffix, contents)`; written as `<kind>.<suffix>`.
    pub files: Vec<(String, Vec<u8>)>,
    /// `None` when the experiment has no pass/fail verdict.
    pub passed: Option<bool>,
}

fn outcome(kind: ExperimentKind, result: Value, files: Vec<(String, Vec<u8>)>, passed: Option<bool>) -> Outcome {
    Outcome {
        kind,
        result,
        files,
        passed,
    }
}

fn series(report: &EvolutionReport) -> (String, Vec<u8>) {
    let mut buf = Vec::new();
    report.write_columns(&mut buf).expect("writing to memory");
    ("series.dat".into(), buf)
}

fn report_summary(report: &EvolutionReport) -> Value {
    json!({
        "params": report.params,
        "samples": report.times.len(),
        "final_time": report.times.last(),
        "initial_norm": report.initial_norm,
        "initial_charge": report.initial_charge,
        "initial_momentum": report.initial_momentum,
        "max_norm_drift": report.max_norm_drift(),
        "max_charge_drift": report.max_charge_drift(),
        "max_momentum_drift": report.max_momentum_drift(),
        "final_discrepancy": report.final_discrepancy(),
    })
}

pub fn run(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<Outcome> {
    let packet = cfg.packet_spec().build()?;
    let em = cfg.potential.build(packet.grid(), &cfg.constants)?;
    let dt = cfg.solver.dt;
    match kind {
        ExperimentKind::PacketInfo => packet_info(&packet),
        ExperimentKind::EvolveFree => evolve_free(cfg, &packet),
        ExperimentKind::EvolveKg => {
            let dt = dt.expect("resolved config carries dt");
            let options = KgOptions {
                frame: cfg.solver.frame,
                samples: cfg.solver.samples,
            };
            let (state, report) = evolve_kg_with(&KGState::from_packet(&packet, 0.0), &em, dt, cfg.solver.steps, &options)?;
            let position = position_expectation(&state.to_field()).ok();
            let mut result = report_summary(&report);
            result["final_position"] = json!(position);
            Ok(outcome(kind, result, vec![series(&report)], None))
        }
        ExperimentKind::EvolveSchrodinger => {
            let dt = dt.expect("resolved config carries dt");
            let field = synthesize_low_energy(&packet);
            let (out, report) = evolve_schrodinger_with(&field, &em, dt, cfg.solver.steps, cfg.solver.samples)?;
            let mut result = report_summary(&report);
            result["final_position"] = json!(position_expectation(&out).ok());
            result["final_width"] = json!((0..packet.grid().dim()).map(|a| position_width(&out, a)).collect::<Vec<_>>());
            Ok(outcome(kind, result, vec![series(&report)], None))
        }
        ExperimentKind::CompareLowEnergy => {
            let report = compare_low_energy(&packet, &em, cfg.solver.horizon, dt)?;
            let mut result = report_summary(&report);
            result["max_discrepancy"] = json!(report.discrepancy.iter().cloned().fold(0.0, f64::max));
            Ok(outcome(kind, result, vec![series(&report)], None))
        }
        ExperimentKind::GaugeAudit => gauge_audit(cfg, &packet, &em),
        ExperimentKind::BornTrials => {
            let array = detector_array(&cfg.measurement, packet.grid())?;
            let verdict = born_rule_check(&packet, &array, cfg.measurement.trials, cfg.measurement.seed)?;
            let passed = verdict.passed;
            Ok(outcome(kind, json!({ "bins": array.bins(), "verdict": verdict }), Vec::new(), Some(passed)))
        }
        ExperimentKind::DetectionForce => detection_force(cfg, &packet),
        ExperimentKind::FullSuite => unreachable!("the suite is expanded by the runner"),
    }
}

fn packet_info(packet: &MomentumPacket) -> Result<Outcome> {
    let report = functional_report(packet)?;
    let k = packet.constants();
    let mc = k.m * k.c;
    let mut buf = Vec::new();
    export_amplitudes(packet, &mut buf)?;
    let result = json!({
        "functionals": report,
        "mass_shell_deviation": (report.momentum.minkowski_sq() - mc * mc) / (mc * mc),
        "nodes": packet.grid().len(),
        "grid": packet.grid(),
    });
    Ok(outcome(ExperimentKind::PacketInfo, result, vec![("amplitudes.dat".into(), buf)], None))
}

fn evolve_free(cfg: &ExperimentConfig, packet: &MomentumPacket) -> Result<Outcome> {
    let samples = cfg.solver.samples.max(1);
    let horizon = cfg.solver.horizon;
    let mut report = EvolutionReport::new(ReportParams {
        solver: "spectral-exact".into(),
        dt: horizon / samples as f64,
        steps: samples,
        frame: None,
        stability_bound: None,
    });
    let mut positions = Vec::with_capacity(samples + 1);
    for i in 0..=samples {
        let t = horizon * i as f64 / samples as f64;
        let f = evolve_free_kg(packet, t);
        let norm = braket_kg(&f, &OperatorSpec::Identity)?.re;
        report.record(t, norm, field_charge(&f)?, field_momentum(&f)?, None);
        positions.push(position_expectation(&f)?);
    }
    let first = &positions[0];
    let last = &positions[samples];
    let velocity: Vec<f64> = first.iter().zip(last).map(|(a, b)| (b - a) / horizon).collect();
    let mut result = report_summary(&report);
    result["initial_position"] = json!(first);
    result["final_position"] = json!(last);
    result["mean_velocity"] = json!(velocity);
    Ok(outcome(ExperimentKind::EvolveFree, result, vec![series(&report)], None))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Random superposition of low periodic modes of the position box.
pub fn random_gauge_function(grid: &KGrid, rng: &mut ChaCha8Rng, modes: usize, amplitude: f64, max_harmonic: u32) -> Vec<f64> {
    let kf = grid.spacing();
    let span = 2 * max_harmonic as u64 + 1;
    let terms: Vec<([f64; 3], f64, f64)> = (0..modes)
        .map(|_| {
            let mut n = [0.0; 3];
            for v in n.iter_mut().take(grid.dim()) {
                *v = (rng.next_u64() % span) as f64 - max_harmonic as f64;
            }
            (n, uniform(rng, -amplitude, amplitude), uniform(rng, 0.0, 2.0 * PI))
        })
        .collect();
    let offset = uniform(rng, -1.0, 1.0);
    (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            offset
                + terms
                    .iter()
                    .map(|(n, a, ph)| a * (kf * (n[0] * x[0] + n[1] * x[1] + n[2] * x[2]) + ph).cos())
                    .sum::<f64>()
        })
        .collect()
}

fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

const CURRENT_IDENTITY_TOLERANCE: f64 = 1e-6;
const BIANCHI_TOLERANCE: f64 = 1e-8;

fn gauge_audit(cfg: &ExperimentConfig, packet: &MomentumPacket, em: &EMPotential) -> Result<Outcome> {
    let g = &cfg.gauge;
    let grid = *packet.grid();
    let k = cfg.constants;
    let gamma = k.coupling();
    let field = synthesize(packet, 0.0);
    let q0 = coupled_charge(&field, em)?;
    let p0 = coupled_momentum(&field, em)?;
    let f0 = curvature(em, &k);
    let peak = field.psi().iter().fold(0.0f64, |m, v| m.max(v.norm_sqr()));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.measurement.seed);
    let (mut density, mut charge, mut momentum, mut covariance, mut strength, mut pure) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..g.draws {
        let lambda = random_gauge_function(&grid, &mut rng, g.modes, g.amplitude, g.max_harmonic);
        let (f2, em2) = gauge_transform(&field, em, &lambda)?;
        density = density.max(
            field
                .psi()
                .iter()
                .zip(f2.psi())
                .fold(0.0f64, |m, (a, b)| m.max((a.norm_sqr() - b.norm_sqr()).abs()))
                / peak,
        );
        charge = charge.max((coupled_charge(&f2, &em2)? - q0).abs() / q0.abs());
        momentum = momentum.max(coupled_momentum(&f2, &em2)?.max_abs_diff(&p0) / p0.0[0].abs());
        for mu in 0..=grid.dim() {
            let d = covariant_derivative(&field, em, mu)?;
            let d2 = covariant_derivative(&f2, &em2, mu)?;
            let expect: Vec<C64> = d
                .psi()
                .iter()
                .zip(&lambda)
                .map(|(v, l)| v * C64::from_polar(1.0, -gamma * l))
                .collect();
            covariance = covariance.max(relative_l2(d2.psi(), &expect));
        }
        strength = strength.max(curvature(&em2, &k).max_abs_diff(&f0));
        let (_, gauge_only) = gauge_transform(&field, &EMPotential::zero(&grid), &lambda)?;
        pure = pure.max(curvature(&gauge_only, &k).max_abs());
    }
    let bianchi = if grid.dim() == 3 { Some(bianchi_residual(&f0)?) } else { None };

    let center = position_expectation(&field)?;
    let width = (0..grid.dim()).map(|a| position_width(&field, a)).fold(0.0, f64::max);
    let mut c = [0.0; 3];
    c[..center.len()].copy_from_slice(&center);
    let bump = gaussian_bump(&grid, c, width);
    let identity = (0..=grid.dim())
        .map(|mu| current_identity_check(packet, mu, g.epsilon, &bump))
        .collect::<Result<Vec<_>>>()?;
    let identity_worst = identity.iter().fold(0.0f64, |m, r| m.max(r.rel_error));

    let tol = g.tolerance;
    let passed = [density, charge, momentum, covariance, strength, pure].iter().all(|v| *v < tol)
        && bianchi.is_none_or(|b| b < BIANCHI_TOLERANCE)
        && identity_worst < CURRENT_IDENTITY_TOLERANCE;
    let result = json!({
        "draws": g.draws,
        "tolerance": tol,
        "invariance": {
            "density": density,
            "charge": charge,
            "momentum": momentum,
            "curvature": strength,
        },
        "covariant_derivative": covariance,
        "pure_gauge_curvature": pure,
        "bianchi_residual": bianchi,
        "current_identity": identity,
    });
    Ok(outcome(ExperimentKind::GaugeAudit, result, Vec::new(), Some(passed)))
}

fn detection_force(cfg: &ExperimentConfig, packet: &MomentumPacket) -> Result<Outcome> {
    let m = &cfg.measurement;
    let array = detector_array(m, packet.grid())?;
    let (ledger, table, summary) = detection_force_trials(packet, &array, m.trials, m.seed)?;
    let expectation = expectation_vs_noether(packet, &array, m.trials, m.seed)?;
    let refinement = if packet.grid().dim() == 1 && !m.refinement.is_empty() {
        Some(refinement_study(packet, &m.refinement)?)
    } else {
        None
    };
    let mut files = Vec::new();
    if m.write_trials {
        let mut buf = Vec::new();
        ledger.write_trials(&mut buf, &table)?;
        files.push(("trials.dat".into(), buf));
    }
    let passed = summary.within_band && expectation.within_band;
    let result = json!({
        "bins": array.bins(),
        "summary": summary,
        "expectation": expectation,
        "table": table,
        "refinement": refinement,
    });
    Ok(outcome(ExperimentKind::DetectionForce, result, files, Some(passed)))
}
