//! Field samples on the position grid together with whatever is known
//! about their time dependence.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::grid::{KGrid, BOUNDARY_MARGIN, LEAKAGE_TOLERANCE};
use crate::packet::MomentumPacket;

/// Source of time derivatives `(d/dx^0)^n psi`.
#[derive(Debug, Clone)]
pub enum TimeData {
    /// Samples only.
    None,
    /// Field synthesized from a packet, optionally multiplied by a
    /// time-independent function. Every order is available.
    Spectral {
        packet: MomentumPacket,
        modulation: Option<Arc<[C64]>>,
    },
    /// Time derivative `d psi / dt` from an evolution step.
    Velocity(Arc<[C64]>),
}

#[derive(Debug, Clone)]
pub struct FieldState {
    grid: KGrid,
    constants: PhysicalConstants,
    psi: Vec<C64>,
    t: f64,
    time: TimeData,
}

fn check_len(grid: &KGrid, len: usize) -> Result<()> {
    if len != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} samples, got {len}",
            grid.len()
        )));
    }
    Ok(())
}

impl FieldState {
    pub(crate) fn with_time_data(
        grid: KGrid,
        constants: PhysicalConstants,
        psi: Vec<C64>,
        t: f64,
        time: TimeData,
    ) -> Self {
        FieldState {
            grid,
            constants,
            psi,
            t,
            time,
        }
    }

    pub fn from_samples(grid: KGrid, constants: PhysicalConstants, psi: Vec<C64>, t: f64) -> Result<Self> {
        check_len(&grid, psi.len())?;
        Ok(Self::with_time_data(grid, constants, psi, t, TimeData::None))
    }

    /// Samples plus their time derivative `d psi / dt`.
    pub fn with_velocity(
        grid: KGrid,
        constants: PhysicalConstants,
        psi: Vec<C64>,
        psi_t: Vec<C64>,
        t: f64,
    ) -> Result<Self> {
        check_len(&grid, psi.len())?;
        check_len(&grid, psi_t.len())?;
        Ok(Self::with_time_data(grid, constants, psi, t, TimeData::Velocity(psi_t.into())))
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn time_data(&self) -> &TimeData {
        &self.time
    }

    /// `(d/dx^0)^order psi` with `x^0 = c t`.
    pub fn time_derivative(&self, order: usize) -> Result<Vec<C64>> {
        if order == 0 {
            return Ok(self.psi.clone());
        }
        match &self.time {
            TimeData::Spectral { packet, modulation } => {
                let mut d = packet.field_derivative(self.t, order);
                if let Some(f) = modulation {
                    for (v, m) in d.iter_mut().zip(f.iter()) {
                        *v *= m;
                    }
                }
                Ok(d)
            }
            TimeData::Velocity(v) if order == 1 => {
                let inv_c = 1.0 / self.constants.c;
                Ok(v.iter().map(|z| z * inv_c).collect())
            }
            _ => Err(Error::MissingPacket { order }),
        }
    }

    /// Pointwise product with a time-independent function.
    pub fn modulated(&self, f: &[C64]) -> Result<FieldState> {
        check_len(&self.grid, f.len())?;
        let psi = self.psi.iter().zip(f).map(|(a, b)| a * b).collect();
        let time = match &self.time {
            TimeData::None => TimeData::None,
            TimeData::Velocity(v) => TimeData::Velocity(v.iter().zip(f).map(|(a, b)| a * b).collect()),
            TimeData::Spectral { packet, modulation } => {
                let m: Arc<[C64]> = match modulation {
                    Some(old) => old.iter().zip(f).map(|(a, b)| a * b).collect(),
                    None => f.iter().copied().collect(),
                };
                TimeData::Spectral {
                    packet: packet.clone(),
                    modulation: Some(m),
                }
            }
        };
        Ok(Self::with_time_data(self.grid, self.constants, psi, self.t, time))
    }

    /// `sum |psi|^2 dx^d`.
    pub fn norm_sq(&self) -> f64 {
        self.psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.x_cell()
    }

    /// Largest `|psi|` within the boundary band of the position grid.
    pub fn boundary_max(&self) -> f64 {
        self.grid.margin_max(&self.psi, BOUNDARY_MARGIN)
    }

    /// Whether `|psi|` relative to its peak vanishes near the boundary.
    pub fn is_localized(&self) -> bool {
        let peak = self.psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
        peak == 0.0 || self.boundary_max() <= LEAKAGE_TOLERANCE * peak.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{gaussian_amplitude, normalize, synthesize};

    fn packet() -> MomentumPacket {
        let g = KGrid::one_d(256, 0.02, 1.0).unwrap();
        normalize(
            &gaussian_amplitude(&g, [1.0, 0.0, 0.0], 0.1).unwrap(),
            PhysicalConstants::default(),
        )
        .unwrap()
    }

    #[test]
    fn spectral_time_derivative_matches_finite_difference() {
        let p = packet();
        let h = 1e-4;
        let a = synthesize(&p, 1.0 - h);
        let b = synthesize(&p, 1.0 + h);
        let mid = synthesize(&p, 1.0);
        let d = mid.time_derivative(1).unwrap();
        let d2 = mid.time_derivative(2).unwrap();
        for i in 0..p.grid().len() {
            let fd = (b.psi()[i] - a.psi()[i]) / (2.0 * h);
            assert!((fd - d[i]).norm() < 1e-8);
            let fd2 = (b.psi()[i] - 2.0 * mid.psi()[i] + a.psi()[i]) / (h * h);
            assert!((fd2 - d2[i]).norm() < 1e-5);
        }
    }

    #[test]
    fn velocity_data_gives_first_order_only() {
        let g = KGrid::one_d(16, 0.5, 0.0).unwrap();
        let k = PhysicalConstants::new(1.0, 2.0, 1.0, -1.0).unwrap();
        let psi = vec![C64::new(1.0, 0.0); 16];
        let f = FieldState::with_velocity(g, k, psi.clone(), psi, 0.0).unwrap();
        assert_eq!(f.time_derivative(1).unwrap()[0], C64::new(0.5, 0.0));
        assert_eq!(f.time_derivative(2), Err(Error::MissingPacket { order: 2 }));
        let bare = FieldState::from_samples(g, k, vec![C64::new(1.0, 0.0); 16], 0.0).unwrap();
        assert_eq!(bare.time_derivative(1), Err(Error::MissingPacket { order: 1 }));
    }

    #[test]
    fn synthesized_packet_is_localized() {
        let f = synthesize(&packet(), 0.0);
        assert!(f.is_localized());
        let flat = FieldState::from_samples(*f.grid(), *f.constants(), vec![C64::new(1.0, 0.0); 256], 0.0).unwrap();
        assert!(!flat.is_localized());
    }
}
