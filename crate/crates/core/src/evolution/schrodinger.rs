//! Strang split-step for `i hbar psi_t = [(pi - q A)^2 / 2m + q phi] psi`
//! with a static scalar potential and a spatially uniform vector potential.

use num_complex::Complex64 as C64;

use super::kg::sample_schedule;
use super::report::{EvolutionReport, ReportParams};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::gauge::EMPotential;
use crate::noether::FourVector;
use crate::spectral;

pub struct SchrodingerStepper {
    field: FieldState,
    dt: f64,
    half_potential: Vec<C64>,
    kinetic: Vec<C64>,
    t: f64,
}

impl SchrodingerStepper {
    pub fn new(field: &FieldState, em: &EMPotential, dt: f64) -> Result<Self> {
        if field.grid() != em.grid() {
            return Err(Error::GridMismatch);
        }
        let a = em.uniform_vector_value().ok_or(Error::NonuniformVectorPotential)?;
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be finite and nonzero, got {dt}")));
        }
        let grid = *field.grid();
        let k = *field.constants();
        let half_potential = em
            .phi()
            .iter()
            .map(|p| C64::from_polar(1.0, -k.q * p * dt / (2.0 * k.hbar)))
            .collect();
        let kinetic = (0..grid.len())
            .map(|i| {
                let kv = grid.wave_vector(i);
                let p2: f64 = (0..grid.dim()).map(|ax| (k.hbar * kv[ax] - k.q * a[ax]).powi(2)).sum();
                C64::from_polar(1.0, -p2 * dt / (2.0 * k.m * k.hbar))
            })
            .collect();
        Ok(SchrodingerStepper {
            field: field.clone(),
            dt,
            half_potential,
            kinetic,
            t: field.t(),
        })
    }

    pub fn advance(&mut self, steps: usize) {
        if steps == 0 {
            return;
        }
        let grid = *self.field.grid();
        let mut psi = self.field.psi().to_vec();
        for _ in 0..steps {
            for (v, h) in psi.iter_mut().zip(&self.half_potential) {
                *v *= h;
            }
            let mut modes = spectral::to_modes(&grid, &psi);
            for (m, k) in modes.iter_mut().zip(&self.kinetic) {
                *m *= k;
            }
            psi = spectral::from_modes(&grid, &modes);
            for (v, h) in psi.iter_mut().zip(&self.half_potential) {
                *v *= h;
            }
            self.t += self.dt;
        }
        self.field = FieldState::from_samples(grid, *self.field.constants(), psi, self.t).expect("same grid");
    }

    pub fn field(&self) -> &FieldState {
        &self.field
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// `hbar sum |psi|^2` and the kinetic momentum `<pi - q A>` with `P^0 = m c sum |psi|^2`.
fn observables(field: &FieldState, em: &EMPotential) -> (f64, f64, FourVector) {
    let k = field.constants();
    let grid = field.grid();
    let norm = field.norm_sq();
    let a = em.uniform_vector_value().unwrap_or_default();
    let mut p = [k.m * k.c * norm, 0.0, 0.0, 0.0];
    let cell = grid.x_cell();
    for axis in 0..grid.dim() {
        let d = spectral::derivative(grid, field.psi(), axis);
        let pi: f64 = field
            .psi()
            .iter()
            .zip(&d)
            .map(|(p, dp)| (p.conj() * C64::new(0.0, -k.hbar) * dp).re)
            .sum::<f64>()
            * cell;
        p[axis + 1] = pi - k.q * a[axis] * norm;
    }
    (norm, k.hbar * norm, FourVector(p))
}

pub fn evolve_schrodinger(
    field: &FieldState,
    em: &EMPotential,
    dt: f64,
    steps: usize,
) -> Result<(FieldState, EvolutionReport)> {
    evolve_schrodinger_with(field, em, dt, steps, 50)
}

pub fn evolve_schrodinger_with(
    field: &FieldState,
    em: &EMPotential,
    dt: f64,
    steps: usize,
    samples: usize,
) -> Result<(FieldState, EvolutionReport)> {
    let mut stepper = SchrodingerStepper::new(field, em, dt)?;
    let mut report = EvolutionReport::new(ReportParams {
        solver: "schrodinger-split-step".into(),
        dt,
        steps,
        frame: None,
        stability_bound: None,
    });
    let (n, q, p) = observables(field, em);
    report.record(field.t(), n, q, p, None);
    let mut done = 0;
    for target in sample_schedule(steps, samples) {
        if target == 0 {
            continue;
        }
        stepper.advance(target - done);
        done = target;
        let (n, q, p) = observables(stepper.field(), em);
        report.record(stepper.t(), n, q, p, None);
    }
    Ok((stepper.field().clone(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::evolution::position_width;
    use crate::gauge::PotentialSpec;
    use crate::grid::KGrid;
    use crate::noether::position_expectation;
    use crate::packet::{gaussian_amplitude, normalize, synthesize_low_energy};

    fn low_energy_gaussian(grid: &KGrid, k0: f64, delta: f64, x0: f64) -> FieldState {
        let raw = gaussian_amplitude(grid, [k0, 0.0, 0.0], delta).unwrap().translated([x0, 0.0, 0.0]);
        synthesize_low_energy(&normalize(&raw, PhysicalConstants::default()).unwrap())
    }

    #[test]
    fn free_gaussian_spreads_as_predicted() {
        let g = KGrid::one_d(1024, 2.0 * std::f64::consts::PI / 200.0, 0.0).unwrap();
        let delta = 0.5;
        let f = low_energy_gaussian(&g, 0.0, delta, 0.0);
        let s0 = 1.0 / (2.0 * delta);
        assert!((position_width(&f, 0) - s0).abs() < 1e-10);
        let em = EMPotential::zero(&g);
        let (out, report) = evolve_schrodinger(&f, &em, 0.01, 1000).unwrap();
        let t = out.t();
        let expect = s0 * (1.0 + (t / (2.0 * s0 * s0)).powi(2)).sqrt();
        let w = position_width(&out, 0);
        assert!(((w - expect) / expect).abs() < 1e-6, "{w} {expect}");
        assert!(report.max_norm_drift() < 1e-12);
    }

    #[test]
    fn ehrenfest_drift() {
        let g = KGrid::one_d(1024, 2.0 * std::f64::consts::PI / 200.0, 0.5 * 32.0 * 2.0 * std::f64::consts::PI / 200.0).unwrap();
        let k0 = g.offset()[0];
        let f = low_energy_gaussian(&g, k0, 0.1, -20.0);
        let em = EMPotential::zero(&g);
        let (out, _) = evolve_schrodinger(&f, &em, 0.01, 4000).unwrap();
        let x = position_expectation(&out).unwrap()[0];
        assert!((x - (-20.0 + k0 * out.t())).abs() < 1e-6, "{x}");
    }

    #[test]
    fn uniform_vector_potential_cancels_drift() {
        let g = KGrid::one_d(512, 2.0 * std::f64::consts::PI / 100.0, 20.0 * 2.0 * std::f64::consts::PI / 100.0).unwrap();
        let k = PhysicalConstants::default();
        let k0 = g.offset()[0];
        let f = low_energy_gaussian(&g, k0, 0.2, 0.0);
        let em = EMPotential::uniform_vector(&g, [k.hbar * k0 / k.q, 0.0, 0.0]);
        let (out, report) = evolve_schrodinger(&f, &em, 0.01, 1000).unwrap();
        let x = position_expectation(&out).unwrap()[0];
        assert!(x.abs() < 1e-8, "{x}");
        assert!(report.momentum_drift.iter().all(|p| p.0[1].abs() < 1e-10));
    }

    #[test]
    fn harmonic_oscillation_frequency() {
        let omega = 1.0;
        let g = KGrid::one_d(512, 2.0 * std::f64::consts::PI / 100.0, 0.0).unwrap();
        let k = PhysicalConstants::default();
        let em = PotentialSpec::Harmonic { omega, window: 0.6 }.build(&g, &k).unwrap();
        // ground-state width, displaced
        let delta = (k.m * omega / (2.0 * k.hbar)).sqrt();
        let f = low_energy_gaussian(&g, 0.0, delta, 2.0);
        let dt = 0.01;
        let mut stepper = SchrodingerStepper::new(&f, &em, dt).unwrap();
        let mut xs = vec![position_expectation(stepper.field()).unwrap()[0]];
        let period = 2.0 * std::f64::consts::PI / omega;
        let steps = (3.2 * period / dt) as usize;
        for _ in 0..steps {
            stepper.advance(1);
            xs.push(position_expectation(stepper.field()).unwrap()[0]);
        }
        let mut crossings = Vec::new();
        for i in 1..xs.len() {
            if xs[i - 1] > 0.0 && xs[i] <= 0.0 || xs[i - 1] < 0.0 && xs[i] >= 0.0 {
                crossings.push((i as f64 - 1.0 + xs[i - 1] / (xs[i - 1] - xs[i])) * dt);
            }
        }
        assert!(crossings.len() >= 6, "{crossings:?}");
        let n = crossings.len() - 1;
        let measured = std::f64::consts::PI * n as f64 / (crossings[n] - crossings[0]);
        assert!(((measured - omega) / omega).abs() < 1e-4, "{measured}");
    }

    #[test]
    fn unitary_and_reversible() {
        let g = KGrid::one_d(256, 0.1, 1.0).unwrap();
        let k = PhysicalConstants::default();
        let f = low_energy_gaussian(&g, 1.0, 0.5, -5.0);
        let em = PotentialSpec::Harmonic { omega: 0.2, window: 0.6 }.build(&g, &k).unwrap();
        let (a, report) = evolve_schrodinger(&f, &em, 0.02, 1000).unwrap();
        assert!(report.max_norm_drift() < 1e-12);
        let (b, _) = evolve_schrodinger(&a, &em, -0.02, 1000).unwrap();
        let err: f64 = f.psi().iter().zip(b.psi()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let n: f64 = f.psi().iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / n < 1e-8);
    }

    #[test]
    fn rejects_nonuniform_vector_potential() {
        let g = KGrid::three_d(40, 0.3, [0.0; 3]).unwrap();
        let k = PhysicalConstants::default();
        let em = PotentialSpec::UniformB { b: 0.1, window: 0.6 }.build(&g, &k).unwrap();
        let f = FieldState::from_samples(g, k, vec![C64::new(0.0, 0.0); g.len()], 0.0).unwrap();
        assert!(matches!(
            evolve_schrodinger(&f, &em, 0.1, 1),
            Err(Error::NonuniformVectorPotential)
        ));
    }
}
