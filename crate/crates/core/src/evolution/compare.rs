use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kg::{default_dt, sample_schedule, stability_bound, KGState, KgFrame, KgStepper};
use super::report::{EvolutionReport, ReportParams};
use super::schrodinger::SchrodingerStepper;
use super::{phase_aligned_distance, reduce_nonrelativistic};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::gauge::{coupled_charge, coupled_momentum, EMPotential};
use crate::grid::KGrid;
use crate::packet::{gaussian_amplitude, normalize, MomentumPacket};

/// Largest `hbar |<k>| / (m c)` accepted by the comparison.
pub const MAX_LOW_ENERGY_RATIO: f64 = 0.3;

const COMPARE_SAMPLES: usize = 50;

fn mean_momentum_ratio(packet: &MomentumPacket) -> f64 {
    let grid = packet.grid();
    let k = packet.constants();
    let probs = packet.probabilities();
    let total: f64 = probs.iter().sum();
    let mut mean = [0.0; 3];
    for (i, p) in probs.iter().enumerate() {
        let kv = grid.wave_vector(i);
        for a in 0..3 {
            mean[a] += p * kv[a];
        }
    }
    let kbar = (mean.iter().map(|v| v * v).sum::<f64>()).sqrt() / total;
    k.hbar * kbar / (k.m * k.c)
}

/// Runs the coupled Klein-Gordon leapfrog and the Schrodinger split-step
/// from the same samples and records the phase-aligned L2 distance between
/// the Schrodinger field and the phase-stripped Klein-Gordon field.
///
/// The step defaults to [`default_dt`] in the rest-mass frame; the horizon is
/// covered by a whole number of equal steps no longer than the requested one.
/// Norm, charge and momentum columns refer to the Klein-Gordon trajectory.
pub fn compare_low_energy(packet: &MomentumPacket, em: &EMPotential, horizon: f64, dt: Option<f64>) -> Result<EvolutionReport> {
    let ratio = mean_momentum_ratio(packet);
    if ratio > MAX_LOW_ENERGY_RATIO {
        return Err(Error::TooRelativistic {
            ratio,
            limit: MAX_LOW_ENERGY_RATIO,
        });
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let constants = *packet.constants();
    let requested = dt.unwrap_or_else(|| default_dt(em, &constants, KgFrame::RestMass)).abs();
    let steps = (horizon / requested).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;

    let state = KGState::from_packet(packet, 0.0);
    let mut kg = KgStepper::new(&state, em, dt, KgFrame::RestMass)?;
    let start = state.to_field();
    let mut nr = SchrodingerStepper::new(&reduce_nonrelativistic(&start, 0.0), em, dt)?;

    let mut report = EvolutionReport::new(ReportParams {
        solver: "low-energy-comparison".into(),
        dt,
        steps,
        frame: Some(KgFrame::RestMass.name().into()),
        stability_bound: Some(stability_bound(em, &constants, KgFrame::RestMass)),
    });
    report.record(0.0, start.norm_sq(), coupled_charge(&start, em)?, coupled_momentum(&start, em)?, Some(0.0));
    let mut done = 0;
    for target in sample_schedule(steps, COMPARE_SAMPLES) {
        kg.advance(target - done);
        nr.advance(target - done);
        done = target;
        let field = kg.state().to_field();
        let reduced = reduce_nonrelativistic(&field, field.t());
        let disc = phase_aligned_distance(nr.field().psi(), reduced.psi());
        report.record(
            field.t(),
            field.norm_sq(),
            coupled_charge(&field, em)?,
            coupled_momentum(&field, em)?,
            Some(disc),
        );
    }
    Ok(report)
}

/// A free Gaussian comparison run.
#[derive(Debug, Clone)]
pub struct LowEnergyCase {
    pub v_over_c: f64,
    pub packet: MomentumPacket,
    pub horizon: f64,
    pub dt: Option<f64>,
}

impl LowEnergyCase {
    /// Packet with group velocity `v_over_c * c` and `delta_k = k0 / 10`,
    /// started five widths behind the origin and run for ten widths of travel.
    pub fn moving(v_over_c: f64, constants: PhysicalConstants) -> Result<Self> {
        if !(v_over_c > 0.0 && v_over_c < 1.0) {
            return Err(Error::InvalidArgument(format!("v/c must lie in (0, 1), got {v_over_c}")));
        }
        let mu = constants.compton_wavenumber();
        let k0 = mu * v_over_c / (1.0 - v_over_c * v_over_c).sqrt();
        let delta_k = k0 / 10.0;
        let sigma = 1.0 / (2.0 * delta_k);
        let grid = KGrid::one_d(128, delta_k / 4.0, k0)?;
        let raw = gaussian_amplitude(&grid, [k0, 0.0, 0.0], delta_k)?.translated([-5.0 * sigma, 0.0, 0.0]);
        Ok(LowEnergyCase {
            v_over_c,
            packet: normalize(&raw, constants)?,
            horizon: 10.0 * sigma / (v_over_c * constants.c),
            dt: None,
        })
    }

    /// Packet at rest with momentum spread `delta_k`, run for `horizon`.
    pub fn rest(delta_k: f64, horizon: f64, constants: PhysicalConstants) -> Result<Self> {
        let grid = KGrid::one_d(128, delta_k / 4.0, 0.0)?;
        let raw = gaussian_amplitude(&grid, [0.0; 3], delta_k)?;
        Ok(LowEnergyCase {
            v_over_c: 0.0,
            packet: normalize(&raw, constants)?,
            horizon,
            dt: None,
        })
    }

    pub fn run(&self) -> Result<EvolutionReport> {
        let em = EMPotential::zero(self.packet.grid());
        compare_low_energy(&self.packet, &em, self.horizon, self.dt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub v_over_c: Vec<f64>,
    pub discrepancy: Vec<f64>,
    /// Least-squares slope of `ln discrepancy` against `ln (v/c)`.
    pub exponent: f64,
}

/// Final discrepancies of [`LowEnergyCase::moving`] runs, computed concurrently.
pub fn low_energy_sweep(v_over_c: &[f64], constants: PhysicalConstants) -> Result<SweepResult> {
    if v_over_c.len() < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least two velocities".into()));
    }
    let discrepancy = v_over_c
        .par_iter()
        .map(|&v| {
            let report = LowEnergyCase::moving(v, constants)?.run()?;
            Ok(report.final_discrepancy().unwrap_or(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = v_over_c.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = discrepancy.iter().map(|d| d.ln()).collect();
    Ok(SweepResult {
        v_over_c: v_over_c.to_vec(),
        exponent: slope(&xs, &ys),
        discrepancy,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slow_packet_agrees() {
        let case = LowEnergyCase::moving(0.01, PhysicalConstants::default()).unwrap();
        let report = case.run().unwrap();
        let d = report.final_discrepancy().unwrap();
        assert!(d <= 1e-3, "{d}");
        assert_eq!(report.discrepancy[0], 0.0);
        assert!(report.max_charge_drift() < 1e-6);
    }

    #[test]
    fn rest_packet_agrees() {
        let case = LowEnergyCase::rest(1e-3, 2e5, PhysicalConstants::default()).unwrap();
        let d = case.run().unwrap().final_discrepancy().unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn fast_packet_is_rejected() {
        let k = PhysicalConstants::default();
        let g = KGrid::one_d(128, 0.01, 0.5).unwrap();
        let p = normalize(&gaussian_amplitude(&g, [0.5, 0.0, 0.0], 0.05).unwrap(), k).unwrap();
        let em = EMPotential::zero(&g);
        match compare_low_energy(&p, &em, 1.0, None) {
            Err(Error::TooRelativistic { ratio, .. }) => assert!((ratio - 0.5).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = [3.0f64, 12.0, 48.0].iter().map(|v| v.ln()).collect();
        assert!((slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
