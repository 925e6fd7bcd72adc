//! Positive-frequency wave packets in momentum space.
//!
//! A packet stores normalized amplitudes `alpha(k)` on a [`KGrid`] with
//! `sum |alpha|^2 dk^d = 1`. Its field is
//!
//! ```text
//! psi(x, t) = sum_k dk^d / sqrt((2 pi)^d 2 k0) alpha(k) exp(i (k.x - omega t))
//! ```
//!
//! with `k0 = omega(k)/c` and `omega = c sqrt(|k|^2 + (mc/hbar)^2)`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{FieldState, TimeData};
use crate::grid::{KGrid, BOUNDARY_MARGIN, LEAKAGE_TOLERANCE};
use crate::io;
use crate::spectral;

/// Support half-width, in units of the packet spread, that must fit on the grid.
pub const SUPPORT_SIGMAS: f64 = 6.0;

/// Amplitudes before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAmplitudes {
    pub grid: KGrid,
    pub values: Vec<C64>,
}

impl RawAmplitudes {
    pub fn new(grid: KGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(RawAmplitudes { grid, values })
    }

    /// `sum |a|^2 dk^d`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.k_cell()
    }

    pub fn scaled(&self, z: C64) -> RawAmplitudes {
        RawAmplitudes {
            grid: self.grid,
            values: self.values.iter().map(|a| a * z).collect(),
        }
    }

    pub fn plus(&self, other: &RawAmplitudes) -> Result<RawAmplitudes> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(RawAmplitudes {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Multiplies by `exp(-i k.x0)`, moving the field by `x0`.
    pub fn translated(&self, x0: [f64; 3]) -> RawAmplitudes {
        RawAmplitudes {
            grid: self.grid,
            values: translate(&self.grid, &self.values, x0),
        }
    }
}

fn translate(grid: &KGrid, values: &[C64], x0: [f64; 3]) -> Vec<C64> {
    values
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = grid.wave_vector(i);
            let phase: f64 = (0..grid.dim()).map(|ax| k[ax] * x0[ax]).sum();
            a * C64::from_polar(1.0, -phase)
        })
        .collect()
}

/// Angular frequency of the positive-frequency mode with wave vector `k`.
pub fn dispersion(k: [f64; 3], constants: &PhysicalConstants) -> f64 {
    let mu = constants.compton_wavenumber();
    constants.c * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + mu * mu).sqrt()
}

fn check_fits(grid: &KGrid, center: [f64; 3], half_width: f64) -> Result<()> {
    for axis in 0..grid.dim() {
        let (lo, hi) = grid.k_range(axis);
        if center[axis] - half_width < lo || center[axis] + half_width > hi {
            return Err(Error::GridTooNarrow(format!(
                "support [{}, {}] on axis {axis} exceeds grid range [{lo}, {hi}]",
                center[axis] - half_width,
                center[axis] + half_width
            )));
        }
    }
    Ok(())
}

/// Gaussian profile `exp(-|k - k0|^2 / (4 delta_k^2))`.
pub fn gaussian_amplitude(grid: &KGrid, k0: [f64; 3], delta_k: f64) -> Result<RawAmplitudes> {
    if !(delta_k.is_finite() && delta_k > 0.0) {
        return Err(Error::InvalidArgument(format!("delta_k must be positive, got {delta_k}")));
    }
    if k0[grid.dim()..].iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidArgument("k0 has components beyond the grid dimension".into()));
    }
    check_fits(grid, k0, SUPPORT_SIGMAS * delta_k)?;
    let values = (0..grid.len())
        .map(|i| {
            let k = grid.wave_vector(i);
            let d2: f64 = (0..3).map(|a| (k[a] - k0[a]).powi(2)).sum();
            C64::new((-d2 / (4.0 * delta_k * delta_k)).exp(), 0.0)
        })
        .collect();
    RawAmplitudes::new(*grid, values)
}

/// Direction-dependent weight for shell packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AngularWeight {
    #[default]
    Uniform,
    /// 1 where `k . axis >= 0`, else 0.
    Hemisphere { axis: [f64; 3] },
    /// `sin(theta) exp(i phi)` shape used for angular-momentum checks is built
    /// separately; this variant weights by `|k_hat . axis|^power`.
    Lobe { axis: [f64; 3], power: u32 },
}

impl AngularWeight {
    pub fn evaluate(&self, dir: [f64; 3]) -> f64 {
        match self {
            AngularWeight::Uniform => 1.0,
            AngularWeight::Hemisphere { axis } => {
                if dot(dir, *axis) >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            AngularWeight::Lobe { axis, power } => {
                let n = dot(*axis, *axis).sqrt();
                (dot(dir, *axis) / n).abs().powi(*power as i32)
            }
        }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Unit direction of `k`; the origin is assigned `+z`.
pub fn direction(k: [f64; 3]) -> [f64; 3] {
    let r = dot(k, k).sqrt();
    if r == 0.0 {
        [0.0, 0.0, 1.0]
    } else {
        [k[0] / r, k[1] / r, k[2] / r]
    }
}

/// Outgoing shell `w(k_hat) exp(-(|k| - k_mag)^2 / (4 delta_k^2))` centred on `k = 0`.
pub fn shell_amplitude(
    grid: &KGrid,
    k_mag: f64,
    delta_k: f64,
    weight: impl Fn([f64; 3]) -> f64,
) -> Result<RawAmplitudes> {
    if grid.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: grid.dim(),
        });
    }
    if !(delta_k.is_finite() && delta_k > 0.0) {
        return Err(Error::InvalidArgument(format!("delta_k must be positive, got {delta_k}")));
    }
    if k_mag - SUPPORT_SIGMAS * delta_k <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "shell radius {k_mag} must exceed {SUPPORT_SIGMAS} delta_k"
        )));
    }
    check_fits(grid, [0.0; 3], k_mag + SUPPORT_SIGMAS * delta_k)?;
    let mut any = false;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let k = grid.wave_vector(i);
        let w = weight(direction(k));
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidArgument(format!("angular weight must be nonnegative, got {w}")));
        }
        any |= w > 0.0;
        let r = dot(k, k).sqrt();
        values.push(C64::new(w * (-(r - k_mag).powi(2) / (4.0 * delta_k * delta_k)).exp(), 0.0));
    }
    if !any {
        return Err(Error::ZeroWeight);
    }
    RawAmplitudes::new(*grid, values)
}

/// Normalized positive-frequency packet.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumPacket {
    grid: KGrid,
    alpha: Arc<[C64]>,
    constants: PhysicalConstants,
    sigma: f64,
}

/// Scales `a` by `sigma = (sum |a|^2 dk^d)^(-1/2)`.
pub fn normalize(raw: &RawAmplitudes, constants: PhysicalConstants) -> Result<MomentumPacket> {
    let s = raw.norm_sq();
    if s == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let sigma = s.powf(-0.5);
    let alpha: Vec<C64> = raw.values.iter().map(|a| a * sigma).collect();
    MomentumPacket::build(raw.grid, alpha, constants, sigma)
}

impl MomentumPacket {
    fn build(grid: KGrid, alpha: Vec<C64>, constants: PhysicalConstants, sigma: f64) -> Result<Self> {
        let leak = grid.margin_max(&alpha, BOUNDARY_MARGIN);
        if leak >= LEAKAGE_TOLERANCE {
            return Err(Error::BoundaryLeakage {
                max_amplitude: leak,
                margin: BOUNDARY_MARGIN,
                tolerance: LEAKAGE_TOLERANCE,
            });
        }
        Ok(MomentumPacket {
            grid,
            alpha: alpha.into(),
            constants,
            sigma,
        })
    }

    /// Keeps the amplitudes as given (`sigma = 1`). Used to check
    /// bilinearity of functionals in the overall scale.
    pub fn unnormalized(raw: &RawAmplitudes, constants: PhysicalConstants) -> Result<Self> {
        Self::build(raw.grid, raw.values.clone(), constants, 1.0)
    }

    /// Single-node packet, the discrete plane wave.
    pub fn plane_wave(grid: &KGrid, node: usize, constants: PhysicalConstants) -> Result<Self> {
        if node >= grid.len() {
            return Err(Error::InvalidArgument(format!("node {node} outside grid")));
        }
        let mut values = vec![C64::new(0.0, 0.0); grid.len()];
        values[node] = C64::new(1.0, 0.0);
        normalize(&RawAmplitudes::new(*grid, values)?, constants)
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    /// Normalization factor that produced this packet.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn norm_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.k_cell()
    }

    /// `|alpha|^2 dk^d` per node.
    pub fn probabilities(&self) -> Vec<f64> {
        let cell = self.grid.k_cell();
        self.alpha.iter().map(|a| a.norm_sqr() * cell).collect()
    }

    pub fn frequency(&self, idx: usize) -> f64 {
        dispersion(self.grid.wave_vector(idx), &self.constants)
    }

    pub fn translated(&self, x0: [f64; 3]) -> MomentumPacket {
        MomentumPacket {
            grid: self.grid,
            alpha: translate(&self.grid, &self.alpha, x0).into(),
            constants: self.constants,
            sigma: self.sigma,
        }
    }

    /// Multiplies every amplitude by `z`; with `|z| = 1` a global phase.
    pub fn with_phase(&self, z: C64) -> MomentumPacket {
        MomentumPacket {
            grid: self.grid,
            alpha: self.alpha.iter().map(|a| a * z).collect::<Vec<_>>().into(),
            constants: self.constants,
            sigma: self.sigma,
        }
    }

    pub fn raw(&self) -> RawAmplitudes {
        RawAmplitudes {
            grid: self.grid,
            values: self.alpha.to_vec(),
        }
    }

    /// `(d/dx^0)^order psi` at time `t`, evaluated on the dual position grid.
    pub fn field_derivative(&self, t: f64, order: usize) -> Vec<C64> {
        let d = self.grid.dim() as i32;
        let cell = self.grid.k_cell();
        let two_pi_d = (2.0 * PI).powi(d);
        let modes: Vec<C64> = (0..self.grid.len())
            .map(|i| {
                let omega = self.frequency(i);
                let k0 = omega / self.constants.c;
                let weight = cell / (two_pi_d * 2.0 * k0).sqrt();
                let mut c = self.alpha[i] * weight * C64::from_polar(1.0, -omega * t);
                for _ in 0..order {
                    c *= C64::new(0.0, -k0);
                }
                c
            })
            .collect();
        spectral::from_modes(&self.grid, &modes)
    }
}

/// Klein-Gordon field of the packet at time `t`, carrying spectral time data.
pub fn synthesize(packet: &MomentumPacket, t: f64) -> FieldState {
    let psi = packet.field_derivative(t, 0);
    FieldState::with_time_data(
        packet.grid,
        packet.constants,
        psi,
        t,
        TimeData::Spectral {
            packet: packet.clone(),
            modulation: None,
        },
    )
}

/// Low-energy wavefunction `sum_k dk^d / (2 pi)^(d/2) alpha(k) exp(i k.x)`,
/// normalized so that `sum |psi|^2 dx^d = sum |alpha|^2 dk^d`.
pub fn synthesize_low_energy(packet: &MomentumPacket) -> FieldState {
    let d = packet.grid.dim() as i32;
    let w = packet.grid.k_cell() / (2.0 * PI).powf(d as f64 / 2.0);
    let modes: Vec<C64> = packet.alpha.iter().map(|a| a * w).collect();
    let psi = spectral::from_modes(&packet.grid, &modes);
    FieldState::with_time_data(packet.grid, packet.constants, psi, 0.0, TimeData::None)
}

/// Declarative description of a packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub grid: KGrid,
    pub profile: Profile,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Gaussian {
        #[serde(default)]
        k0: [f64; 3],
        delta_k: f64,
        #[serde(default)]
        x0: [f64; 3],
    },
    Shell {
        k_mag: f64,
        delta_k: f64,
        #[serde(default)]
        angular: AngularWeight,
    },
    PlaneWave {
        k: [f64; 3],
    },
}

impl PacketSpec {
    pub fn build(&self) -> Result<MomentumPacket> {
        match &self.profile {
            Profile::Gaussian { k0, delta_k, x0 } => {
                let raw = gaussian_amplitude(&self.grid, *k0, *delta_k)?.translated(*x0);
                normalize(&raw, self.constants)
            }
            Profile::Shell {
                k_mag,
                delta_k,
                angular,
            } => {
                let raw = shell_amplitude(&self.grid, *k_mag, *delta_k, |d| angular.evaluate(d))?;
                normalize(&raw, self.constants)
            }
            Profile::PlaneWave { k } => {
                MomentumPacket::plane_wave(&self.grid, self.grid.nearest_node(*k), self.constants)
            }
        }
    }

    /// Central wave vector and spread, when the profile has them.
    pub fn nominal_k0(&self) -> [f64; 3] {
        match &self.profile {
            Profile::Gaussian { k0, .. } => *k0,
            Profile::Shell { .. } => [0.0; 3],
            Profile::PlaneWave { k } => *k,
        }
    }
}

const AXES: [&str; 3] = ["k_x", "k_y", "k_z"];

/// Writes `k components, Re alpha, Im alpha` per node.
pub fn export_amplitudes<W: Write>(packet: &MomentumPacket, w: &mut W) -> std::io::Result<()> {
    let d = packet.grid.dim();
    let mut headers: Vec<&str> = AXES[..d].to_vec();
    headers.extend(["re_alpha", "im_alpha"]);
    let rows: Vec<Vec<f64>> = (0..packet.grid.len())
        .map(|i| {
            let k = packet.grid.wave_vector(i);
            let mut row = k[..d].to_vec();
            row.push(packet.alpha[i].re);
            row.push(packet.alpha[i].im);
            row
        })
        .collect();
    io::write_table(w, &headers, &rows)
}

/// Reads amplitudes written by [`export_amplitudes`], checking the wave vectors against `grid`.
pub fn import_amplitudes<R: BufRead>(grid: &KGrid, r: R) -> Result<RawAmplitudes> {
    let table = io::read_table(r)?;
    let d = grid.dim();
    if table.rows.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} rows, found {}", grid.len(), table.rows.len())));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != d + 2 {
            return Err(Error::Parse(format!("row {i}: expected {} columns", d + 2)));
        }
        let k = grid.wave_vector(i);
        for a in 0..d {
            if (row[a] - k[a]).abs() > 1e-9 * grid.spacing() {
                return Err(Error::Parse(format!("row {i}: wave vector does not match grid")));
            }
        }
        values.push(C64::new(row[d], row[d + 1]));
    }
    RawAmplitudes::new(*grid, values)
}
