use gaugewave::gauge::{covariant_derivative, curvature, gauge_transform, PotentialSpec};
use gaugewave::measurement::{all_bin_momenta, bin_probabilities, sample_detection, DetectorArray};
use gaugewave::noether::{field_charge, noether_charge, noether_momentum};
use gaugewave::packet::{gaussian_amplitude, normalize, synthesize};
use gaugewave::{FourVector, KGrid, MomentumPacket, PhysicalConstants, C64};
use proptest::prelude::*;

fn packet(k0: f64, dk: f64) -> MomentumPacket {
    let spacing = dk / 3.0;
    let g = KGrid::one_d(128, spacing, (k0 / spacing).round() * spacing).unwrap();
    normalize(&gaussian_amplitude(&g, [k0, 0.0, 0.0], dk).unwrap(), PhysicalConstants::default()).unwrap()
}

fn max_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn global_phase_changes_nothing(k0 in -0.5f64..0.5, dk in 0.05f64..0.2, theta in 0.0f64..6.3) {
        let p = packet(k0, dk);
        let q = p.with_phase(C64::from_polar(1.0, theta));
        prop_assert!((noether_charge(&p) - noether_charge(&q)).abs() < 1e-12);
        prop_assert!(noether_momentum(&p).max_abs_diff(&noether_momentum(&q)) < 1e-12);
        let array = DetectorArray::uniform_intervals(p.grid(), 8).unwrap();
        let a = bin_probabilities(&p, &array).unwrap();
        let b = bin_probabilities(&q, &array).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14));
    }

    #[test]
    fn charge_is_quadratic_in_amplitude(k0 in -0.5f64..0.5, dk in 0.05f64..0.2, s in 0.1f64..5.0) {
        let p = packet(k0, dk);
        let raw = p.raw().scaled(C64::new(s, 0.0));
        let scaled = MomentumPacket::unnormalized(&raw, *p.constants()).unwrap();
        let q1 = field_charge(&synthesize(&p, 0.0)).unwrap();
        let q2 = field_charge(&synthesize(&scaled, 0.0)).unwrap();
        prop_assert!((q2 - s * s * q1).abs() < 1e-10 * s * s);
    }

    #[test]
    fn bin_momenta_decompose_total(
        k0 in -0.5f64..0.5,
        dk in 0.05f64..0.2,
        bins in 1usize..12,
        labels in proptest::collection::vec(0usize..64, 128),
    ) {
        let p = packet(k0, dk);
        let assignment: Vec<Option<usize>> = labels.iter().map(|l| Some(l % bins)).collect();
        let array = DetectorArray::explicit(p.grid(), bins, &assignment).unwrap();
        let sum = all_bin_momenta(&p, &array).unwrap().iter().fold(FourVector::default(), |acc, v| acc.add(v));
        prop_assert!(sum.max_abs_diff(&noether_momentum(&p)) < 1e-10);
        let probs = bin_probabilities(&p, &array).unwrap();
        prop_assert!(probs.iter().all(|v| *v >= 0.0));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_a_pure_function(
        weights in proptest::collection::vec(0.0f64..1.0, 1..16),
        seed in any::<u64>(),
        index in any::<u64>(),
    ) {
        prop_assume!(weights.iter().any(|w| *w > 0.0));
        let a = sample_detection(&weights, index, seed).unwrap();
        let b = sample_detection(&weights, index, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(weights[a] > 0.0);
    }

    #[test]
    fn random_gauge_transformations_are_covariant(
        k0 in -0.5f64..0.5,
        c in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        let p = packet(k0, 0.1);
        let k = *p.constants();
        let g = *p.grid();
        let kf = g.spacing();
        let lambda: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.position(i)[0];
                c[0] + c[1] * (kf * x).sin() + c[2] * (kf * x).cos() + c[3] * (2.0 * kf * x + c[4]).sin()
                    + 0.5 * c[5] * (3.0 * kf * x).cos()
            })
            .collect();
        let em = PotentialSpec::UniformA { a: [0.05, 0.0, 0.0] }.build(&g, &k).unwrap();
        let f = synthesize(&p, 0.0);
        let (f2, em2) = gauge_transform(&f, &em, &lambda).unwrap();
        // |psi|^2 is unchanged
        prop_assert!(f.psi().iter().zip(f2.psi()).all(|(a, b)| (a.norm() - b.norm()).abs() < 1e-12));
        // D psi transforms like psi
        let d1 = covariant_derivative(&f, &em, 1).unwrap();
        let d2 = covariant_derivative(&f2, &em2, 1).unwrap();
        let phase: Vec<C64> = lambda.iter().map(|l| C64::from_polar(1.0, -k.coupling() * l)).collect();
        let expect: Vec<C64> = d1.psi().iter().zip(&phase).map(|(d, z)| d * z).collect();
        prop_assert!(max_norm(d2.psi(), &expect) < 1e-10);
        // the curvature is untouched
        prop_assert!(curvature(&em, &k).max_abs_diff(&curvature(&em2, &k)) < 1e-10);
    }
}
