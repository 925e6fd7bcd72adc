//! Time evolution: exact spectral Klein-Gordon propagation, a reversible
//! leapfrog for the Klein-Gordon equation with a static scalar potential,
//! split-step Schrodinger evolution, and the low-energy comparison between
//! the two.

mod compare;
mod kg;
mod report;
mod schrodinger;

pub use compare::{compare_low_energy, low_energy_sweep, LowEnergyCase, SweepResult, MAX_LOW_ENERGY_RATIO};
pub use kg::{
    default_dt, evolve_free_kg, evolve_kg_coupled, evolve_kg_with, stability_bound, KGState, KgFrame, KgOptions,
    KgStepper, DEFAULT_DT_FACTOR, STABILITY_FACTOR,
};
pub use report::{EvolutionReport, ReportParams};
pub use schrodinger::{evolve_schrodinger, evolve_schrodinger_with, SchrodingerStepper};

use num_complex::Complex64 as C64;

use crate::field::FieldState;

/// Strips the rest-mass phase: `psi_S = exp(+i m c^2 t / hbar) psi_KG`.
pub fn reduce_nonrelativistic(field: &FieldState, t: f64) -> FieldState {
    let phase = C64::from_polar(1.0, field.constants().rest_frequency() * t);
    let psi = field.psi().iter().map(|v| v * phase).collect();
    FieldState::from_samples(*field.grid(), *field.constants(), psi, t).expect("same grid")
}

/// `min_theta || a - exp(i theta) b || / || a ||`.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let overlap: C64 = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    if na == 0.0 {
        return if b.iter().all(|v| v.norm_sqr() == 0.0) { 0.0 } else { f64::INFINITY };
    }
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - phase * y).norm_sqr()).sum();
    (d2 / na).sqrt()
}

/// Variance-based width `sqrt(<x^2> - <x>^2)` along `axis`, weighting by `|psi|^2`.
pub fn position_width(field: &FieldState, axis: usize) -> f64 {
    let grid = field.grid();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, p) in field.psi().iter().enumerate() {
        let w = p.norm_sqr();
        let x = grid.position(i)[axis];
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
    }
    let mean = s1 / s0;
    (s2 / s0 - mean * mean).sqrt()
}
