//! Klein-Gordon evolution.
//!
//! With a static scalar potential and `A_i = 0` the equation
//! `(D_mu D^mu + mu^2) psi = 0` reads
//!
//! ```text
//! psi_tt = c^2 lap psi - c^2 mu^2 psi + (g phi)^2 psi - 2 i g phi psi_t,   g = q / hbar
//! ```
//!
//! It is integrated with a staggered leapfrog whose kicks treat the
//! first-order term with the trapezoidal rule, so the scheme is
//! palindromic and exactly reversible. By default the stepper works in the
//! rest-mass frame `chi = exp(i m c^2 t / hbar) psi`, obtained by the
//! constant gauge shift `phi -> phi - m c^2 / q`, which removes the fast
//! rest-mass oscillation from the stepped variable.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::report::{EvolutionReport, ReportParams};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::gauge::{coupled_charge, coupled_momentum, EMPotential};
use crate::grid::KGrid;
use crate::packet::{synthesize, MomentumPacket};
use crate::spectral;

/// Largest allowed `dt * omega_max`.
pub const STABILITY_FACTOR: f64 = 0.5;
/// Default `dt * omega_max`.
pub const DEFAULT_DT_FACTOR: f64 = 0.1;

/// Exact spectral evolution: the packet's field at time `t`.
pub fn evolve_free_kg(packet: &MomentumPacket, t: f64) -> FieldState {
    synthesize(packet, t)
}

/// Field and its time derivative `psi_t` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KGState {
    pub grid: KGrid,
    pub constants: PhysicalConstants,
    pub psi: Vec<C64>,
    pub psi_t: Vec<C64>,
    pub t: f64,
}

impl KGState {
    pub fn from_packet(packet: &MomentumPacket, t: f64) -> Self {
        let c = packet.constants().c;
        KGState {
            grid: *packet.grid(),
            constants: *packet.constants(),
            psi: packet.field_derivative(t, 0),
            psi_t: packet.field_derivative(t, 1).into_iter().map(|v| v * c).collect(),
            t,
        }
    }

    pub fn to_field(&self) -> FieldState {
        FieldState::with_velocity(self.grid, self.constants, self.psi.clone(), self.psi_t.clone(), self.t)
            .expect("state vectors match the grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KgFrame {
    /// Step `chi = exp(i m c^2 t / hbar) psi`.
    #[default]
    RestMass,
    /// Step `psi` directly.
    Lab,
}

impl KgFrame {
    fn shift(self, constants: &PhysicalConstants) -> f64 {
        match self {
            KgFrame::RestMass => constants.rest_frequency(),
            KgFrame::Lab => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KgFrame::RestMass => "rest-mass",
            KgFrame::Lab => "lab",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgOptions {
    pub frame: KgFrame,
    /// Number of report samples after the initial one; 0 records only the endpoints.
    pub samples: usize,
}

impl Default for KgOptions {
    fn default() -> Self {
        KgOptions {
            frame: KgFrame::RestMass,
            samples: 50,
        }
    }
}

fn effective_coupling(em: &EMPotential, constants: &PhysicalConstants, frame: KgFrame) -> Vec<f64> {
    let g = constants.coupling();
    let shift = frame.shift(constants);
    em.phi().iter().map(|p| g * p - shift).collect()
}

fn omega_max(grid: &KGrid, constants: &PhysicalConstants, g_phi: &[f64]) -> f64 {
    let c = constants.c;
    let mu2 = constants.compton_wavenumber().powi(2);
    let kmax = grid.max_wavenumber();
    let local = g_phi.iter().fold(0.0f64, |m, g| m.max((c * c * mu2 - g * g).abs()));
    (c * c * kmax * kmax + local).sqrt()
}

/// Largest stable `|dt|` for the given potential and frame.
pub fn stability_bound(em: &EMPotential, constants: &PhysicalConstants, frame: KgFrame) -> f64 {
    STABILITY_FACTOR / omega_max(em.grid(), constants, &effective_coupling(em, constants, frame))
}

pub fn default_dt(em: &EMPotential, constants: &PhysicalConstants, frame: KgFrame) -> f64 {
    DEFAULT_DT_FACTOR / omega_max(em.grid(), constants, &effective_coupling(em, constants, frame))
}

/// Staggered leapfrog state. Between steps it holds `chi^n` and either the
/// synchronized `u^n` (before the first step) or the staggered `u^(n - 1/2)`.
pub struct KgStepper {
    grid: KGrid,
    constants: PhysicalConstants,
    frame: KgFrame,
    dt: f64,
    laplacian: Vec<f64>,
    g_phi: Vec<f64>,
    local: Vec<f64>,
    chi: Vec<C64>,
    u: Vec<C64>,
    synced: bool,
    t: f64,
}

impl KgStepper {
    pub fn new(state: &KGState, em: &EMPotential, dt: f64, frame: KgFrame) -> Result<Self> {
        if state.grid != *em.grid() {
            return Err(Error::GridMismatch);
        }
        if em.has_vector_potential() {
            return Err(Error::NonzeroVectorPotential);
        }
        let k = state.constants;
        let g_phi = effective_coupling(em, &k, frame);
        let bound = STABILITY_FACTOR / omega_max(&state.grid, &k, &g_phi);
        if !(dt.is_finite() && dt != 0.0) || dt.abs() > bound {
            return Err(Error::UnstableStep { dt, bound });
        }
        let c2 = k.c * k.c;
        let mu2 = k.compton_wavenumber().powi(2);
        let grid = state.grid;
        let laplacian = (0..grid.len())
            .map(|i| {
                let kv = grid.wave_vector(i);
                -c2 * (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2])
            })
            .collect();
        let local = g_phi.iter().map(|g| g * g - c2 * mu2).collect();
        let w = frame.shift(&k);
        let rot = C64::from_polar(1.0, w * state.t);
        let chi: Vec<C64> = state.psi.iter().map(|p| p * rot).collect();
        let u = state
            .psi_t
            .iter()
            .zip(&state.psi)
            .map(|(pt, p)| (pt + C64::new(0.0, w) * p) * rot)
            .collect();
        Ok(KgStepper {
            grid,
            constants: k,
            frame,
            dt,
            laplacian,
            g_phi,
            local,
            chi,
            u,
            synced: true,
            t: state.t,
        })
    }

    fn operator(&self) -> Vec<C64> {
        let mut modes = spectral::to_modes(&self.grid, &self.chi);
        for (m, l) in modes.iter_mut().zip(&self.laplacian) {
            *m *= l;
        }
        let mut out = spectral::from_modes(&self.grid, &modes);
        for ((o, c), l) in out.iter_mut().zip(&self.chi).zip(&self.local) {
            *o += c * l;
        }
        out
    }

    // trapezoidal kick of length h: u (1 + i g h) = u (1 - i g h) + h L chi
    fn kicked(&self, u: &[C64], h: f64) -> Vec<C64> {
        let l = self.operator();
        u.iter()
            .zip(&l)
            .zip(&self.g_phi)
            .map(|((u, l), g)| (u * C64::new(1.0, -g * h) + l * h) / C64::new(1.0, g * h))
            .collect()
    }

    pub fn step(&mut self) {
        let h = if self.synced { self.dt / 2.0 } else { self.dt };
        self.u = self.kicked(&self.u, h);
        self.synced = false;
        let dt = self.dt;
        for (c, u) in self.chi.iter_mut().zip(&self.u) {
            *c += u * dt;
        }
        self.t += dt;
    }

    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame(&self) -> KgFrame {
        self.frame
    }

    /// Lab-frame state with the velocity synchronized to the current time.
    pub fn state(&self) -> KGState {
        let u = if self.synced {
            self.u.clone()
        } else {
            self.kicked(&self.u, self.dt / 2.0)
        };
        let w = self.frame.shift(&self.constants);
        let rot = C64::from_polar(1.0, -w * self.t);
        let psi: Vec<C64> = self.chi.iter().map(|c| c * rot).collect();
        let psi_t = u
            .iter()
            .zip(&psi)
            .map(|(u, p)| u * rot - C64::new(0.0, w) * p)
            .collect();
        KGState {
            grid: self.grid,
            constants: self.constants,
            psi,
            psi_t,
            t: self.t,
        }
    }
}

pub(crate) fn sample_schedule(steps: usize, samples: usize) -> Vec<usize> {
    // step counts at which to record, strictly increasing, ending at `steps`
    let n = samples.clamp(1, steps.max(1));
    let mut out: Vec<usize> = (1..=n).map(|i| i * steps / n).collect();
    out.dedup();
    out
}

fn record(report: &mut EvolutionReport, state: &KGState, em: &EMPotential) -> Result<()> {
    let f = state.to_field();
    report.record(state.t, f.norm_sq(), coupled_charge(&f, em)?, coupled_momentum(&f, em)?, None);
    Ok(())
}

/// Coupled evolution in the default rest-mass frame.
pub fn evolve_kg_coupled(state: &KGState, em: &EMPotential, dt: f64, steps: usize) -> Result<(KGState, EvolutionReport)> {
    evolve_kg_with(state, em, dt, steps, &KgOptions::default())
}

pub fn evolve_kg_with(
    state: &KGState,
    em: &EMPotential,
    dt: f64,
    steps: usize,
    options: &KgOptions,
) -> Result<(KGState, EvolutionReport)> {
    let mut stepper = KgStepper::new(state, em, dt, options.frame)?;
    let mut report = EvolutionReport::new(ReportParams {
        solver: "klein-gordon-leapfrog".into(),
        dt,
        steps,
        frame: Some(options.frame.name().into()),
        stability_bound: Some(stability_bound(em, &state.constants, options.frame)),
    });
    record(&mut report, state, em)?;
    let mut done = 0;
    for target in sample_schedule(steps, options.samples) {
        if target == 0 {
            continue;
        }
        stepper.advance(target - done);
        done = target;
        record(&mut report, &stepper.state(), em)?;
    }
    Ok((stepper.state(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::phase_aligned_distance;
    use crate::gauge::PotentialSpec;
    use crate::noether::{field_charge, noether_momentum};
    use crate::packet::{gaussian_amplitude, normalize};

    fn rest_packet() -> MomentumPacket {
        let g = KGrid::one_d(128, 0.05 / 3.0, 0.0).unwrap();
        normalize(
            &gaussian_amplitude(&g, [0.0; 3], 0.05).unwrap(),
            PhysicalConstants::default(),
        )
        .unwrap()
    }

    fn moving_packet() -> MomentumPacket {
        let dk = 0.1 / 3.0;
        let g = KGrid::one_d(128, dk, 0.3).unwrap();
        normalize(
            &gaussian_amplitude(&g, [0.3, 0.0, 0.0], 0.1).unwrap().translated([-20.0, 0.0, 0.0]),
            PhysicalConstants::default(),
        )
        .unwrap()
    }

    #[test]
    fn free_evolution_at_zero_time_is_synthesis() {
        let p = moving_packet();
        assert_eq!(evolve_free_kg(&p, 0.0).psi(), synthesize(&p, 0.0).psi());
    }

    #[test]
    fn free_evolution_conserves_functionals() {
        let p = moving_packet();
        let q0 = field_charge(&evolve_free_kg(&p, 0.0)).unwrap();
        let q1 = field_charge(&evolve_free_kg(&p, 300.0)).unwrap();
        assert!((q0 - q1).abs() < 1e-10);
        let em = EMPotential::zero(p.grid());
        let p0 = coupled_momentum(&evolve_free_kg(&p, 0.0), &em).unwrap();
        let p1 = coupled_momentum(&evolve_free_kg(&p, 300.0), &em).unwrap();
        assert!(p0.max_abs_diff(&p1) < 1e-10);
        assert!(p0.max_abs_diff(&noether_momentum(&p)) < 1e-10);
    }

    #[test]
    fn state_from_packet_matches_spectral_velocity() {
        let p = moving_packet();
        let s = KGState::from_packet(&p, 0.0);
        let f = synthesize(&p, 0.0);
        let d = f.time_derivative(1).unwrap();
        assert!(s.psi_t.iter().zip(&d).all(|(a, b)| (a - b).norm() < 1e-10));
    }

    #[test]
    fn leapfrog_matches_spectral_oracle() {
        let p = rest_packet();
        let em = EMPotential::zero(p.grid());
        let k = *p.constants();
        let dt = default_dt(&em, &k, KgFrame::RestMass);
        let s0 = KGState::from_packet(&p, 0.0);
        let (s1, report) = evolve_kg_coupled(&s0, &em, dt, 1000).unwrap();
        let exact = evolve_free_kg(&p, s1.t);
        let err = phase_aligned_distance(exact.psi(), &s1.psi);
        let direct: f64 = (exact.psi().iter().zip(&s1.psi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / exact.psi().iter().map(|a| a.norm_sqr()).sum::<f64>())
        .sqrt();
        assert!(direct < 1e-6, "{direct} {err}");
        assert!(report.max_charge_drift() < 1e-6, "{}", report.max_charge_drift());
        assert_eq!(report.charge_drift[0], 0.0);
    }

    #[test]
    fn lab_frame_also_converges() {
        let p = rest_packet();
        let em = EMPotential::zero(p.grid());
        let k = *p.constants();
        let dt = default_dt(&em, &k, KgFrame::Lab);
        let opts = KgOptions {
            frame: KgFrame::Lab,
            samples: 0,
        };
        let (s1, _) = evolve_kg_with(&KGState::from_packet(&p, 0.0), &em, dt, 1000, &opts).unwrap();
        let exact = evolve_free_kg(&p, s1.t);
        assert!(phase_aligned_distance(exact.psi(), &s1.psi) < 1e-3);
    }

    #[test]
    fn constant_potential_shifts_phase_rate() {
        let p = rest_packet();
        let k = *p.constants();
        let phi0 = 0.02;
        let em = PotentialSpec::ConstantPhi { phi: phi0 }.build(p.grid(), &k).unwrap();
        let free = EMPotential::zero(p.grid());
        let dt = default_dt(&em, &k, KgFrame::RestMass).min(default_dt(&free, &k, KgFrame::RestMass));
        let s0 = KGState::from_packet(&p, 0.0);
        let steps = 10_000;
        let (a, _) = evolve_kg_coupled(&s0, &free, dt, steps).unwrap();
        let (b, _) = evolve_kg_coupled(&s0, &em, dt, steps).unwrap();
        let expect = k.q * phi0 / k.hbar;
        // residual phase after removing the predicted rotation, so no unwrapping is needed
        let overlap: C64 = a.psi.iter().zip(&b.psi).map(|(x, y)| x.conj() * y).sum();
        let residual = (overlap * C64::from_polar(1.0, expect * a.t)).arg();
        let rate = expect - residual / a.t;
        assert!(((rate - expect) / expect).abs() < 1e-4, "{rate} {expect}");
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let p = moving_packet();
        let k = *p.constants();
        let em = PotentialSpec::UniformE { e: [1e-3, 0.0, 0.0], window: 0.6 }.build(p.grid(), &k).unwrap();
        let dt = default_dt(&em, &k, KgFrame::RestMass);
        let s0 = KGState::from_packet(&p, 0.0);
        let (s1, _) = evolve_kg_coupled(&s0, &em, dt, 500).unwrap();
        let (s2, _) = evolve_kg_coupled(&s1, &em, -dt, 500).unwrap();
        let norm: f64 = s0.psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let err: f64 = s0.psi.iter().zip(&s2.psi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm < 1e-8, "{}", err / norm);
        assert!(s2.t.abs() < 1e-9);
    }

    #[test]
    fn report_is_independent_of_sampling() {
        let p = moving_packet();
        let em = EMPotential::zero(p.grid());
        let dt = default_dt(&em, p.constants(), KgFrame::RestMass);
        let s0 = KGState::from_packet(&p, 0.0);
        let many = KgOptions { samples: 37, ..Default::default() };
        let few = KgOptions { samples: 0, ..Default::default() };
        let (a, ra) = evolve_kg_with(&s0, &em, dt, 200, &many).unwrap();
        let (b, rb) = evolve_kg_with(&s0, &em, dt, 200, &few).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.times.len(), 38);
        assert_eq!(rb.times.len(), 2);
    }

    #[test]
    fn rejects_unstable_and_vector_potentials() {
        let p = rest_packet();
        let k = *p.constants();
        let em = EMPotential::zero(p.grid());
        let bound = stability_bound(&em, &k, KgFrame::RestMass);
        let s0 = KGState::from_packet(&p, 0.0);
        match evolve_kg_coupled(&s0, &em, 1.01 * bound, 10) {
            Err(Error::UnstableStep { bound: b, .. }) => assert_eq!(b, bound),
            other => panic!("{other:?}"),
        }
        let a = EMPotential::uniform_vector(p.grid(), [0.1, 0.0, 0.0]);
        assert_eq!(evolve_kg_coupled(&s0, &a, 0.5 * bound, 10).unwrap_err(), Error::NonzeroVectorPotential);
    }
}
