use gaugewave::evolution::{
    evolve_free_kg, low_energy_sweep, phase_aligned_distance, reduce_nonrelativistic, LowEnergyCase,
};
use gaugewave::noether::position_expectation;
use gaugewave::packet::{gaussian_amplitude, normalize};
use gaugewave::{KGrid, PhysicalConstants};

#[test]
fn free_packet_moves_at_group_velocity() {
    let k = PhysicalConstants::default();
    let (k0, dk) = (1.0, 0.01);
    let g = KGrid::one_d(128, dk / 3.0, k0).unwrap();
    let sigma = 1.0 / (2.0 * dk);
    let p = normalize(
        &gaussian_amplitude(&g, [k0, 0.0, 0.0], dk).unwrap().translated([-5.0 * sigma, 0.0, 0.0]),
        k,
    )
    .unwrap();
    let omega = (k.c * k.c * k0 * k0 + k.rest_frequency().powi(2)).sqrt();
    let vg = k.c * k.c * k0 / omega;
    let t = 10.0 * sigma / vg;
    let x0 = position_expectation(&evolve_free_kg(&p, 0.0)).unwrap()[0];
    let x1 = position_expectation(&evolve_free_kg(&p, t)).unwrap()[0];
    let v = (x1 - x0) / t;
    assert!(((v - vg) / vg).abs() < 1e-4, "{v} {vg}");
}

#[test]
fn reduced_rest_packet_is_nearly_static() {
    let k = PhysicalConstants::default();
    for dk in [0.02, 0.01] {
        let g = KGrid::one_d(128, dk / 3.0, 0.0).unwrap();
        let p = normalize(&gaussian_amplitude(&g, [0.0; 3], dk).unwrap(), k).unwrap();
        let t = 1.0;
        let a = reduce_nonrelativistic(&evolve_free_kg(&p, 0.0), 0.0);
        let b = reduce_nonrelativistic(&evolve_free_kg(&p, t), t);
        let drift = phase_aligned_distance(a.psi(), b.psi());
        assert!(drift < dk * dk, "{dk}: {drift}");
    }
}

#[test]
fn discrepancy_scales_quadratically_in_velocity() {
    let sweep = low_energy_sweep(&[0.01, 0.03, 0.1], PhysicalConstants::default()).unwrap();
    assert!(sweep.discrepancy[0] <= 1e-3, "{:?}", sweep.discrepancy);
    assert!((1.6..=2.4).contains(&sweep.exponent), "{sweep:?}");
}

#[test]
fn moving_case_rejects_bad_velocity() {
    assert!(LowEnergyCase::moving(0.0, PhysicalConstants::default()).is_err());
    assert!(LowEnergyCase::moving(1.0, PhysicalConstants::default()).is_err());
}
