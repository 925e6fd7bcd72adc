//! Momentum-resolving detector arrays: binning of a packet's momentum
//! support, bin probabilities and momenta, collapse onto a bin, and Monte
//! Carlo detection trials.

mod trials;

pub use trials::{
    born_rule_check, chi_squared, detection_force_trials, expectation_vs_noether, fresh_seed, sample_detection, BinTable,
    BornCheck, BornVerdict, DetectionSummary, ExpectationComparison, Sampler, TrialLedger, CHI_SQUARED_LEVEL,
    STDERR_BAND,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KGrid;
use crate::noether::FourVector;
use crate::packet::{direction, dispersion, normalize, MomentumPacket, RawAmplitudes};

/// Euler angles `(alpha, beta, gamma)` of the tile frame, applied as `Rz Ry Rz`.
/// A generic orientation keeps lattice planes off the tile edges.
pub const TILE_EULER: [f64; 3] = [0.3, 0.7, 0.2];

const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Binning {
    /// Half-open intervals `[edges[n], edges[n + 1])` along the single axis.
    Intervals { edges: Vec<f64> },
    /// `bands x sectors` equal-area tiles of the direction sphere: bands
    /// equally spaced in `cos(theta)`, sectors equally spaced in azimuth, both
    /// measured in the rotated tile frame.
    SolidAngle { bands: usize, sectors: usize },
    /// One bin holding every node.
    Single,
    /// Explicit node-to-bin table.
    Explicit,
}

/// A partition of the momentum grid into detector bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorArray {
    grid: KGrid,
    binning: Binning,
    bins: usize,
    assignment: Vec<u32>,
}

fn rotation(euler: [f64; 3]) -> [[f64; 3]; 3] {
    let rz = |a: f64| {
        let (s, c) = a.sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    };
    let (s, c) = euler[1].sin_cos();
    let ry = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]];
    let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
            }
        }
        m
    };
    mul(mul(rz(euler[0]), ry), rz(euler[2]))
}

/// Splits `tiles` into `bands x sectors` with `bands` the largest divisor not
/// above `sqrt(tiles / 2)`, which keeps tiles roughly square.
pub fn tile_shape(tiles: usize) -> (usize, usize) {
    let limit = (tiles as f64 / 2.0).sqrt();
    let bands = (1..=tiles)
        .filter(|d| tiles % d == 0 && *d as f64 <= limit)
        .max()
        .unwrap_or(1);
    (bands, tiles / bands)
}

impl DetectorArray {
    /// Contiguous k-intervals on a 1D grid. Nodes outside `[edges[0], edges[N])`
    /// stay unassigned.
    pub fn intervals(grid: &KGrid, edges: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: grid.dim(),
            });
        }
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("interval edges must be finite and strictly increasing".into()));
        }
        let assignment = (0..grid.len())
            .map(|i| {
                let k = grid.wave_vector(i)[0];
                // first edge above k, so each bin is closed below and open above
                let n = edges.partition_point(|e| *e <= k);
                if n == 0 || n == edges.len() {
                    UNASSIGNED
                } else {
                    (n - 1) as u32
                }
            })
            .collect();
        Ok(DetectorArray {
            grid: *grid,
            bins: edges.len() - 1,
            binning: Binning::Intervals { edges },
            assignment,
        })
    }

    /// `n` equal intervals covering the grid's node cells exactly.
    pub fn uniform_intervals(grid: &KGrid, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one interval".into()));
        }
        let dk = grid.spacing();
        let lo = grid.k_axis(0, 0) - dk / 2.0;
        let width = grid.points() as f64 * dk / n as f64;
        let edges = (0..=n).map(|i| lo + i as f64 * width).collect();
        Self::intervals(grid, edges)
    }

    /// `tiles` contiguous solid-angle tiles on a 3D grid; `k = 0` points along `+z`.
    pub fn solid_angle(grid: &KGrid, tiles: usize) -> Result<Self> {
        if grid.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                found: grid.dim(),
            });
        }
        if tiles == 0 {
            return Err(Error::InvalidArgument("need at least one tile".into()));
        }
        let (bands, sectors) = tile_shape(tiles);
        let r = rotation(TILE_EULER);
        let assignment = (0..grid.len())
            .map(|i| {
                let d = direction(grid.wave_vector(i));
                // coordinates in the tile frame: R^T d
                let local: Vec<f64> = (0..3).map(|a| (0..3).map(|b| r[b][a] * d[b]).sum()).collect();
                let u = ((local[2] + 1.0) / 2.0 * bands as f64).floor() as usize;
                let mut phi = local[1].atan2(local[0]);
                if phi < 0.0 {
                    phi += 2.0 * std::f64::consts::PI;
                }
                let s = (phi / (2.0 * std::f64::consts::PI) * sectors as f64).floor() as usize;
                (u.min(bands - 1) * sectors + s.min(sectors - 1)) as u32
            })
            .collect();
        Ok(DetectorArray {
            grid: *grid,
            bins: tiles,
            binning: Binning::SolidAngle { bands, sectors },
            assignment,
        })
    }

    pub fn single(grid: &KGrid) -> Self {
        DetectorArray {
            grid: *grid,
            bins: 1,
            binning: Binning::Single,
            assignment: vec![0; grid.len()],
        }
    }

    /// Arbitrary partition; `None` leaves a node unassigned.
    pub fn explicit(grid: &KGrid, bins: usize, assignment: &[Option<usize>]) -> Result<Self> {
        if assignment.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "assignment has {} entries for {} nodes",
                assignment.len(),
                grid.len()
            )));
        }
        let table = assignment
            .iter()
            .map(|a| match a {
                None => Ok(UNASSIGNED),
                Some(b) if *b < bins => Ok(*b as u32),
                Some(b) => Err(Error::InvalidBin { bin: *b, bins }),
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(DetectorArray {
            grid: *grid,
            bins,
            binning: Binning::Explicit,
            assignment: table,
        })
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn binning(&self) -> &Binning {
        &self.binning
    }

    pub fn bin_of(&self, node: usize) -> Option<usize> {
        match self.assignment[node] {
            UNASSIGNED => None,
            b => Some(b as usize),
        }
    }

    fn check(&self, packet: &MomentumPacket) -> Result<()> {
        if packet.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        for (node, a) in packet.alpha().iter().enumerate() {
            if a.norm_sqr() > 0.0 && self.assignment[node] == UNASSIGNED {
                return Err(Error::PartitionGap { node });
            }
        }
        Ok(())
    }

    fn check_bin(&self, bin: usize) -> Result<()> {
        if bin >= self.bins {
            return Err(Error::InvalidBin { bin, bins: self.bins });
        }
        Ok(())
    }
}

/// `p(n) = sum over bin n of |alpha|^2 dk^d`.
pub fn bin_probabilities(packet: &MomentumPacket, array: &DetectorArray) -> Result<Vec<f64>> {
    array.check(packet)?;
    let mut p = vec![0.0; array.bins];
    for (node, w) in packet.probabilities().into_iter().enumerate() {
        if let Some(b) = array.bin_of(node) {
            p[b] += w;
        }
    }
    Ok(p)
}

/// `P^mu(n) = hbar sum over bin n of |alpha|^2 k^mu dk^d`, `k^0 = omega / c`.
pub fn bin_momentum(packet: &MomentumPacket, array: &DetectorArray, bin: usize) -> Result<FourVector> {
    array.check_bin(bin)?;
    Ok(all_bin_momenta(packet, array)?[bin])
}

pub fn all_bin_momenta(packet: &MomentumPacket, array: &DetectorArray) -> Result<Vec<FourVector>> {
    array.check(packet)?;
    let k = packet.constants();
    let grid = packet.grid();
    let mut out = vec![[0.0; 4]; array.bins];
    for (node, w) in packet.probabilities().into_iter().enumerate() {
        if let Some(b) = array.bin_of(node) {
            let kv = grid.wave_vector(node);
            out[b][0] += w * packet.frequency(node) / k.c;
            for a in 0..3 {
                out[b][a + 1] += w * kv[a];
            }
        }
    }
    Ok(out.into_iter().map(|v| FourVector(v).scale(k.hbar)).collect())
}

/// On-shell representative wave vectors `k^mu(n)`: the spatial part is the
/// probability-weighted mean over the bin and `k^0 = omega(k) / c`. Bins
/// without probability report the rest wave vector.
pub fn representative_wave_vectors(packet: &MomentumPacket, array: &DetectorArray) -> Result<Vec<FourVector>> {
    let p = bin_probabilities(packet, array)?;
    let k = packet.constants();
    let grid = packet.grid();
    let mut mean = vec![[0.0; 3]; array.bins];
    for (node, w) in packet.probabilities().into_iter().enumerate() {
        if let Some(b) = array.bin_of(node) {
            let kv = grid.wave_vector(node);
            for a in 0..3 {
                mean[b][a] += w * kv[a];
            }
        }
    }
    Ok(mean
        .into_iter()
        .zip(&p)
        .map(|(m, &pn)| {
            let kbar = if pn > 0.0 { [m[0] / pn, m[1] / pn, m[2] / pn] } else { [0.0; 3] };
            FourVector([dispersion(kbar, k) / k.c, kbar[0], kbar[1], kbar[2]])
        })
        .collect())
}

/// Restriction of the packet to bin `n`, renormalized.
pub fn collapse(packet: &MomentumPacket, array: &DetectorArray, bin: usize) -> Result<MomentumPacket> {
    array.check_bin(bin)?;
    let p = bin_probabilities(packet, array)?;
    if p[bin] <= 0.0 {
        return Err(Error::ZeroBin { bin });
    }
    let values = packet
        .alpha()
        .iter()
        .enumerate()
        .map(|(node, a)| if array.bin_of(node) == Some(bin) { *a } else { Default::default() })
        .collect();
    normalize(&RawAmplitudes::new(*packet.grid(), values)?, *packet.constants())
}

/// Exact mean detection force `|sum_n p(n) (P^mu - hbar k^mu(n))|` (largest
/// component) for a 1D packet under successively finer uniform intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub bins: Vec<usize>,
    pub widths: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `ln residual` against `ln width`.
    pub order: f64,
}

pub fn refinement_study(packet: &MomentumPacket, bins: &[usize]) -> Result<RefinementStudy> {
    if bins.len() < 2 {
        return Err(Error::InvalidArgument("a refinement study needs at least two levels".into()));
    }
    let grid = packet.grid();
    let mut widths = Vec::with_capacity(bins.len());
    let mut residuals = Vec::with_capacity(bins.len());
    for &n in bins {
        let array = DetectorArray::uniform_intervals(grid, n)?;
        let table = BinTable::new(packet, &array)?;
        let mean = table.weighted_mean(&table.delta);
        widths.push(grid.points() as f64 * grid.spacing() / n as f64);
        residuals.push(mean.0.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let xs: Vec<f64> = widths.iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(RefinementStudy {
        bins: bins.to_vec(),
        widths,
        residuals,
        order: sxy / sxx,
    })
}
