//! Conserved functionals of a field: charge, four-momentum, angular
//! momentum and position, evaluated as brakets.
//!
//! The Klein-Gordon braket is
//!
//! ```text
//! <psi|O|psi> = i sum [ psi* d0(O psi) - (d0 psi)* (O psi) ] dx^d
//! ```
//!
//! and the low-energy braket is `sum psi* (O psi) dx^d`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::operator::OperatorSpec;
use crate::packet::{synthesize, MomentumPacket};
use crate::spectral;

/// Contravariant four-vector `(v^0, v^1, v^2, v^3)` with metric `(+, -, -, -)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn minkowski_sq(&self) -> f64 {
        let v = self.0;
        v[0] * v[0] - v[1] * v[1] - v[2] * v[2] - v[3] * v[3]
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn add(&self, o: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }

    pub fn sub(&self, o: &FourVector) -> FourVector {
        FourVector(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }

    pub fn scale(&self, s: f64) -> FourVector {
        FourVector(self.0.map(|v| v * s))
    }

    pub fn max_abs_diff(&self, o: &FourVector) -> f64 {
        (0..4).map(|i| (self.0[i] - o.0[i]).abs()).fold(0.0, f64::max)
    }
}

/// Which braket to use for operator expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BraketForm {
    #[default]
    KleinGordon,
    LowEnergy,
}

pub fn braket_kg(field: &FieldState, op: &OperatorSpec) -> Result<C64> {
    let d_psi = field.time_derivative(1)?;
    let o_psi = op.apply(field)?;
    let d_o_psi = op.apply_time_derivative(field, 1)?;
    let sum: C64 = field
        .psi()
        .iter()
        .zip(&d_psi)
        .zip(o_psi.iter().zip(&d_o_psi))
        .map(|((p, dp), (op, dop))| p.conj() * dop - dp.conj() * op)
        .sum();
    Ok(C64::new(0.0, 1.0) * sum * field.grid().x_cell())
}

pub fn braket_nr(field: &FieldState, op: &OperatorSpec) -> Result<C64> {
    let o_psi = op.apply(field)?;
    let sum: C64 = field.psi().iter().zip(&o_psi).map(|(p, o)| p.conj() * o).sum();
    Ok(sum * field.grid().x_cell())
}

pub fn braket(field: &FieldState, op: &OperatorSpec, form: BraketForm) -> Result<C64> {
    match form {
        BraketForm::KleinGordon => braket_kg(field, op),
        BraketForm::LowEnergy => braket_nr(field, op),
    }
}

/// Noether current `j^mu = i hbar (psi* d^mu psi - psi d^mu psi*)` per node.
pub fn current_density(field: &FieldState, mu: usize) -> Result<Vec<f64>> {
    let hbar = field.constants().hbar;
    let d = match mu {
        0 => field.time_derivative(1)?,
        i if i <= field.grid().dim() => spectral::derivative(field.grid(), field.psi(), i - 1)
            .into_iter()
            .map(|z| -z)
            .collect(),
        _ => {
            return Err(Error::DimensionMismatch {
                expected: mu,
                found: field.grid().dim(),
            })
        }
    };
    Ok(field
        .psi()
        .iter()
        .zip(&d)
        .map(|(p, dp)| -2.0 * hbar * (p.conj() * dp).im)
        .collect())
}

pub fn charge_density(field: &FieldState) -> Result<Vec<f64>> {
    current_density(field, 0)
}

/// `sum j^0 dx^d`.
pub fn field_charge(field: &FieldState) -> Result<f64> {
    Ok(charge_density(field)?.iter().sum::<f64>() * field.grid().x_cell())
}

/// Charge of the synthesized field; `hbar` for a normalized packet.
pub fn noether_charge(packet: &MomentumPacket) -> f64 {
    field_charge(&synthesize(packet, 0.0)).expect("synthesized fields carry spectral time data")
}

/// `P^mu = hbar sum |alpha|^2 k^mu dk^d` with `k^0 = omega / c`.
pub fn noether_momentum(packet: &MomentumPacket) -> FourVector {
    let grid = packet.grid();
    let k = packet.constants();
    let cell = grid.k_cell();
    let mut p = [0.0; 4];
    for (i, a) in packet.alpha().iter().enumerate() {
        let w = a.norm_sqr() * cell;
        if w == 0.0 {
            continue;
        }
        let kv = grid.wave_vector(i);
        p[0] += w * packet.frequency(i) / k.c;
        for ax in 0..3 {
            p[ax + 1] += w * kv[ax];
        }
    }
    FourVector(p.map(|v| v * k.hbar))
}

/// Four-momentum from the field and its first time derivative:
/// `P^0 = hbar sum (|d0 psi|^2 + |grad psi|^2 + mu^2 |psi|^2)` and
/// `P^i = -hbar sum 2 Re(d0 psi* d_i psi)`.
pub fn field_momentum(field: &FieldState) -> Result<FourVector> {
    let grid = field.grid();
    let hbar = field.constants().hbar;
    let mu2 = field.constants().compton_wavenumber().powi(2);
    let d0 = field.time_derivative(1)?;
    let mut p0: f64 = field
        .psi()
        .iter()
        .zip(&d0)
        .map(|(p, t)| t.norm_sqr() + mu2 * p.norm_sqr())
        .sum();
    let mut p = [0.0; 4];
    for axis in 0..grid.dim() {
        let di = spectral::derivative(grid, field.psi(), axis);
        p0 += di.iter().map(|z| z.norm_sqr()).sum::<f64>();
        p[axis + 1] = -2.0 * hbar * d0.iter().zip(&di).map(|(t, g)| (t.conj() * g).re).sum::<f64>() * grid.x_cell();
    }
    p[0] = hbar * p0 * grid.x_cell();
    Ok(FourVector(p))
}

/// `<psi| x cross (-i hbar grad) |psi>` about the origin; 3D only.
pub fn angular_momentum(field: &FieldState, form: BraketForm) -> Result<[f64; 3]> {
    if field.grid().dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: field.grid().dim(),
        });
    }
    let mut j = [0.0; 3];
    for (a, ja) in j.iter_mut().enumerate() {
        *ja = braket(field, &OperatorSpec::angular_momentum(a), form)?.re;
    }
    Ok(j)
}

/// `sum |psi|^2 x / sum |psi|^2`.
pub fn position_expectation(field: &FieldState) -> Result<Vec<f64>> {
    if !field.is_localized() {
        return Err(Error::Delocalized {
            max_amplitude: field.boundary_max(),
        });
    }
    let grid = field.grid();
    let mut num = vec![0.0; grid.dim()];
    let mut den = 0.0;
    for (i, p) in field.psi().iter().enumerate() {
        let w = p.norm_sqr();
        let x = grid.position(i);
        den += w;
        for (a, n) in num.iter_mut().enumerate() {
            *n += w * x[a];
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(num.into_iter().map(|n| n / den).collect())
}

/// `|| [x^i, pi^j] psi - i hbar delta_ij psi || / || psi ||`.
pub fn commutator_check(field: &FieldState, i: usize, j: usize) -> Result<f64> {
    let xp = OperatorSpec::Chain(vec![OperatorSpec::Momentum(j), OperatorSpec::Position(i)]).apply(field)?;
    let px = OperatorSpec::Chain(vec![OperatorSpec::Position(i), OperatorSpec::Momentum(j)]).apply(field)?;
    let delta = if i == j { field.constants().hbar } else { 0.0 };
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, p) in field.psi().iter().enumerate() {
        let r = xp[k] - px[k] - C64::new(0.0, delta) * p;
        num += r.norm_sqr();
        den += p.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((num / den).sqrt())
}

/// Summary of the functionals of a packet's field at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub charge: f64,
    pub momentum: FourVector,
    pub momentum_braket: FourVector,
    pub angular_momentum: Option<[f64; 3]>,
    pub position: Vec<f64>,
    pub norm_kg: f64,
    pub norm_alpha: f64,
}

pub fn functional_report(packet: &MomentumPacket) -> Result<FunctionalReport> {
    let field = synthesize(packet, 0.0);
    let k = packet.constants();
    let mut pb = [0.0; 4];
    for (mu, v) in pb.iter_mut().enumerate().take(packet.grid().dim() + 1) {
        *v = braket_kg(&field, &OperatorSpec::four_momentum(mu, k))?.re;
    }
    Ok(FunctionalReport {
        charge: field_charge(&field)?,
        momentum: noether_momentum(packet),
        momentum_braket: FourVector(pb),
        angular_momentum: if packet.grid().dim() == 3 {
            Some(angular_momentum(&field, BraketForm::KleinGordon)?)
        } else {
            None
        },
        position: position_expectation(&field)?,
        norm_kg: braket_kg(&field, &OperatorSpec::Identity)?.re,
        norm_alpha: packet.norm_sq(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::grid::KGrid;
    use crate::packet::{gaussian_amplitude, normalize, synthesize_low_energy, RawAmplitudes};

    fn gaussian(grid: &KGrid, k0: f64, dk: f64, k: PhysicalConstants) -> MomentumPacket {
        normalize(&gaussian_amplitude(grid, [k0, 0.0, 0.0], dk).unwrap(), k).unwrap()
    }

    fn natural() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn identity_braket_is_one() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, natural());
        let f = synthesize(&p, 0.0);
        let n = braket_kg(&f, &OperatorSpec::Identity).unwrap();
        assert!((n.re - 1.0).abs() < 1e-8 && n.im.abs() < 1e-8);
    }

    #[test]
    fn identity_braket_matches_alpha_sum_unnormalized() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let raw = gaussian_amplitude(&g, [1.0, 0.0, 0.0], 0.1).unwrap().scaled(C64::new(0.3, 1.1));
        let p = MomentumPacket::unnormalized(&raw, natural()).unwrap();
        let n = braket_kg(&synthesize(&p, 2.0), &OperatorSpec::Identity).unwrap();
        let oracle: f64 = raw.values.iter().map(|a| a.norm_sqr()).sum::<f64>() * 0.02;
        assert!((n.re - oracle).abs() < 1e-8 * oracle);
    }

    #[test]
    fn energy_braket_of_plane_wave() {
        let k = PhysicalConstants::new(0.8, 1.3, 1.1, -1.0).unwrap();
        let g = KGrid::one_d(64, 0.1, 0.0).unwrap();
        let p = MomentumPacket::plane_wave(&g, 45, k).unwrap();
        let f = synthesize(&p, 0.0);
        let e = braket_kg(&f, &OperatorSpec::four_momentum(0, &k)).unwrap();
        let k0 = p.frequency(45) / k.c;
        assert!((e.re - k.hbar * k0).abs() < 1e-8);
        let px = braket_kg(&f, &OperatorSpec::four_momentum(1, &k)).unwrap();
        assert!((px.re - k.hbar * g.k_axis(0, 45)).abs() < 1e-8);
    }

    #[test]
    fn low_energy_braket() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, natural());
        let f = synthesize_low_energy(&p);
        let n = braket_nr(&f, &OperatorSpec::Identity).unwrap();
        assert!((n.re - 1.0).abs() < 1e-10);
        let x = braket_nr(&f, &OperatorSpec::Position(0)).unwrap();
        assert!(x.norm() < 1e-10);
    }

    #[test]
    fn momentum_of_modulated_gaussian_matches_analytic() {
        // psi = exp(-x^2 / (4 s^2) + i k0 x) sampled directly in position space
        let g = KGrid::one_d(512, 0.02, 0.0).unwrap();
        let k = PhysicalConstants::new(1.7, 1.0, 1.0, -1.0).unwrap();
        let (s, k0) = (3.0, 1.25);
        let psi: Vec<C64> = (0..g.len())
            .map(|m| {
                let x = g.x_axis(m);
                C64::from_polar((-x * x / (4.0 * s * s)).exp(), k0 * x)
            })
            .collect();
        let f = FieldState::from_samples(g, k, psi, 0.0).unwrap();
        let norm = braket_nr(&f, &OperatorSpec::Identity).unwrap().re;
        let p = braket_nr(&f, &OperatorSpec::Momentum(0)).unwrap() / norm;
        assert!((p.re - k.hbar * k0).abs() < 1e-8, "{p}");
        assert!(p.im.abs() < 1e-8);
    }

    #[test]
    fn charge_is_hbar() {
        let k = PhysicalConstants::new(2.5, 1.0, 1.0, -1.0).unwrap();
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, k);
        assert!((noether_charge(&p) - 2.5).abs() < 1e-8 * 2.5);
        let pw = MomentumPacket::plane_wave(&g, 100, k).unwrap();
        assert!((noether_charge(&pw) - 2.5).abs() < 1e-10 * 2.5);
    }

    #[test]
    fn charge_is_bilinear_in_scale() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, natural());
        let doubled = MomentumPacket::unnormalized(&p.raw().scaled(C64::new(2.0, 0.0)), natural()).unwrap();
        assert!((noether_charge(&doubled) - 4.0).abs() < 4e-8);
    }

    #[test]
    fn de_broglie_for_plane_wave() {
        let k = natural();
        let g = KGrid::one_d(64, 0.1, 0.0).unwrap();
        let p = MomentumPacket::plane_wave(&g, 40, k).unwrap();
        let pm = noether_momentum(&p);
        let kx = g.k_axis(0, 40);
        assert!((pm.0[1] - kx).abs() < 1e-14);
        assert!((pm.0[0] - (1.0 + kx * kx).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_gaussian_has_zero_spatial_momentum() {
        let g = KGrid::one_d(256, 0.02, 0.0).unwrap();
        let p = gaussian(&g, 0.0, 0.2, natural());
        assert!(noether_momentum(&p).0[1].abs() < 1e-12);
    }

    #[test]
    fn narrow_gaussian_momentum_against_brute_force() {
        let g = KGrid::one_d(400, 0.01, 5.0).unwrap();
        let p = gaussian(&g, 5.0, 0.05, natural());
        let pm = noether_momentum(&p);
        assert!((pm.0[1] - 5.0).abs() < 1e-6);
        let (mut s, mut e) = (0.0, 0.0);
        for j in 0..400 {
            let k = 5.0 + (j as f64 - 200.0) * 0.01;
            let w = (-(k - 5.0f64).powi(2) / (2.0 * 0.05 * 0.05)).exp();
            s += w;
            e += w * (1.0 + k * k).sqrt();
        }
        assert!((pm.0[0] - e / s).abs() < 1e-12);
    }

    #[test]
    fn momentum_braket_agrees_with_alpha_sum() {
        let k = PhysicalConstants::new(1.3, 0.9, 1.2, 1.0).unwrap();
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, k);
        let f = synthesize(&p, 0.7);
        let pm = noether_momentum(&p);
        for mu in 0..2 {
            let b = braket_kg(&f, &OperatorSpec::four_momentum(mu, &k)).unwrap();
            assert!((b.re - pm.0[mu]).abs() < 1e-8, "mu={mu}");
        }
        let fm = field_momentum(&f).unwrap();
        assert!(fm.max_abs_diff(&pm) < 1e-8);
    }

    #[test]
    fn functionals_ignore_global_phase() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, natural());
        let q = p.with_phase(C64::from_polar(1.0, 2.1));
        let (a, b) = (functional_report(&p).unwrap(), functional_report(&q).unwrap());
        assert!((a.charge - b.charge).abs() < 1e-12);
        assert!(a.momentum.max_abs_diff(&b.momentum) < 1e-12);
        assert!(a.momentum_braket.max_abs_diff(&b.momentum_braket) < 1e-12);
        assert!((a.position[0] - b.position[0]).abs() < 1e-12);
    }

    #[test]
    fn position_of_translated_packet() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let p = gaussian(&g, 1.0, 0.1, natural());
        let x = position_expectation(&synthesize(&p, 0.0)).unwrap();
        assert!(x[0].abs() < 1e-10);
        let moved = p.translated([-17.5, 0.0, 0.0]);
        let x = position_expectation(&synthesize(&moved, 0.0)).unwrap();
        assert!((x[0] + 17.5).abs() < 1e-8, "{}", x[0]);
    }

    #[test]
    fn delocalized_field_rejected() {
        let g = KGrid::one_d(64, 0.1, 0.0).unwrap();
        let p = MomentumPacket::plane_wave(&g, 40, natural()).unwrap();
        assert!(matches!(
            position_expectation(&synthesize(&p, 0.0)),
            Err(Error::Delocalized { .. })
        ));
    }

    #[test]
    fn commutator_on_resolved_gaussian() {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        let f = synthesize(&gaussian(&g, 1.0, 0.1, natural()), 0.0);
        assert!(commutator_check(&f, 0, 0).unwrap() < 1e-8);
    }

    #[test]
    fn commutator_grows_when_under_resolved() {
        // fixed grid, narrowing position-space width pushes the spectrum past the window
        let g = KGrid::one_d(128, 0.1, 0.0).unwrap();
        let residual = |s: f64| {
            let psi = (0..g.len())
                .map(|m| C64::new((-(g.x_axis(m) / s).powi(2) / 4.0).exp(), 0.0))
                .collect();
            commutator_check(&FieldState::from_samples(g, natural(), psi, 0.0).unwrap(), 0, 0).unwrap()
        };
        let dx = g.x_spacing();
        let rs: Vec<f64> = [1.2, 0.9, 0.7, 0.5].iter().map(|f| residual(f * dx)).collect();
        assert!(rs[0] > 1e-10, "{rs:?}");
        for w in rs.windows(2) {
            assert!(w[1] > w[0], "{rs:?}");
        }
    }

    #[test]
    fn angular_momentum_requires_3d() {
        let g = KGrid::one_d(64, 0.1, 0.0).unwrap();
        let p = MomentumPacket::plane_wave(&g, 40, natural()).unwrap();
        assert!(matches!(
            angular_momentum(&synthesize(&p, 0.0), BraketForm::KleinGordon),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn angular_momentum_of_symmetric_and_winding_packets() {
        let delta = 1.0;
        let g = KGrid::three_d(64, 0.45, [0.0; 3]).unwrap();
        let base = gaussian_amplitude(&g, [0.0; 3], delta).unwrap();
        let p = normalize(&base, natural()).unwrap();
        let f = synthesize(&p, 0.0);
        let j = angular_momentum(&f, BraketForm::KleinGordon).unwrap();
        assert!(j.iter().all(|v| v.abs() < 1e-8), "{j:?}");

        let wound: Vec<C64> = base
            .values
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = g.wave_vector(i);
                a * C64::new(k[0], k[1])
            })
            .collect();
        let p = normalize(&RawAmplitudes::new(g, wound).unwrap(), natural()).unwrap();
        let j = angular_momentum(&synthesize(&p, 0.0), BraketForm::KleinGordon).unwrap();
        assert!((j[2] - 1.0).abs() < 1e-6, "{j:?}");
        assert!(j[0].abs() < 1e-8 && j[1].abs() < 1e-8);
    }

    #[test]
    fn real_field_has_no_angular_momentum() {
        let g = KGrid::three_d(64, 0.4, [0.0; 3]).unwrap();
        let psi: Vec<C64> = (0..g.len())
            .map(|i| {
                let x = g.position(i);
                let r2 = (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.2).powi(2) + x[2] * x[2];
                C64::new((1.0 + x[0] * x[1]) * (-r2 / 2.0).exp(), 0.0)
            })
            .collect();
        let f = FieldState::from_samples(g, natural(), psi, 0.0).unwrap();
        let j = angular_momentum(&f, BraketForm::LowEnergy).unwrap();
        assert!(j.iter().all(|v| v.abs() < 1e-10), "{j:?}");
    }

    #[test]
    fn commutator_off_diagonal_3d() {
        let g = KGrid::three_d(24, 0.5, [0.0; 3]).unwrap();
        let p = normalize(&gaussian_amplitude(&g, [0.0; 3], 0.3).unwrap(), natural()).unwrap();
        let f = synthesize(&p, 0.0);
        assert!(commutator_check(&f, 0, 1).unwrap() < 1e-10);
        assert!(commutator_check(&f, 2, 0).unwrap() < 1e-10);
    }
}
