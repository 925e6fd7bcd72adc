//! Uniform momentum grids and their dual position grids.
//!
//! Node `j` on axis `a` sits at `k_offset[a] + (j - N/2) dk`. The dual position
//! grid has spacing `dx = 2 pi / (N dk)` with node `m` at `(m - N/2) dx`, so the
//! plane waves `exp(i k_j x_m)` on the two grids form an exact discrete Fourier
//! pair. Storage is row-major with the last axis fastest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width, in nodes, of the boundary band in which localized amplitudes must vanish.
pub const BOUNDARY_MARGIN: usize = 4;
/// Amplitude magnitude regarded as vanishing inside the boundary band.
pub const LEAKAGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct KGrid {
    dim: usize,
    points: usize,
    spacing: f64,
    offset: [f64; 3],
}

#[derive(Deserialize)]
struct RawGrid {
    dim: usize,
    points: usize,
    spacing: f64,
    #[serde(default)]
    offset: [f64; 3],
}

impl TryFrom<RawGrid> for KGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        KGrid::new(raw.dim, raw.points, raw.spacing, raw.offset)
    }
}

impl KGrid {
    /// Builds a grid. `offset` entries beyond `dim` must be zero; every offset
    /// must be an integer multiple of `spacing` so that `k = 0` is a lattice node.
    pub fn new(dim: usize, points: usize, spacing: f64, offset: [f64; 3]) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 3, got {dim}")));
        }
        if points < 2 * BOUNDARY_MARGIN + 2 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least {}, got {points}",
                2 * BOUNDARY_MARGIN + 2
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        for (axis, &o) in offset.iter().enumerate() {
            if !o.is_finite() {
                return Err(Error::InvalidGrid(format!("offset[{axis}] is not finite")));
            }
            if axis >= dim && o != 0.0 {
                return Err(Error::InvalidGrid(format!("offset[{axis}] must be zero in {dim}D")));
            }
            let ratio = o / spacing;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "offset[{axis}] = {o} is not a multiple of the spacing {spacing}"
                )));
            }
        }
        Ok(KGrid {
            dim,
            points,
            spacing,
            offset,
        })
    }

    pub fn one_d(points: usize, spacing: f64, offset: f64) -> Result<Self> {
        Self::new(1, points, spacing, [offset, 0.0, 0.0])
    }

    pub fn three_d(points: usize, spacing: f64, offset: [f64; 3]) -> Result<Self> {
        Self::new(3, points, spacing, offset)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn offset(&self) -> [f64; 3] {
        self.offset
    }

    /// Total number of nodes, `points^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k_cell(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn x_spacing(&self) -> f64 {
        2.0 * PI / (self.points as f64 * self.spacing)
    }

    pub fn x_cell(&self) -> f64 {
        self.x_spacing().powi(self.dim as i32)
    }

    /// Periodic length of the position grid along one axis.
    pub fn x_extent(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    pub fn k_axis(&self, axis: usize, j: usize) -> f64 {
        self.offset[axis] + (j as f64 - (self.points / 2) as f64) * self.spacing
    }

    pub fn x_axis(&self, m: usize) -> f64 {
        (m as f64 - (self.points / 2) as f64) * self.x_spacing()
    }

    /// Smallest and largest wavenumber node along `axis`.
    pub fn k_range(&self, axis: usize) -> (f64, f64) {
        (self.k_axis(axis, 0), self.k_axis(axis, self.points - 1))
    }

    /// Per-axis node indices of a flat index; unused axes are zero.
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.points;
        match self.dim {
            1 => [idx, 0, 0],
            _ => [idx / (n * n), (idx / n) % n, idx % n],
        }
    }

    pub fn ravel(&self, nodes: [usize; 3]) -> usize {
        let n = self.points;
        match self.dim {
            1 => nodes[0],
            _ => (nodes[0] * n + nodes[1]) * n + nodes[2],
        }
    }

    /// Wave vector of a node; components beyond `dim` are zero.
    pub fn wave_vector(&self, idx: usize) -> [f64; 3] {
        let nodes = self.unravel(idx);
        let mut k = [0.0; 3];
        for (axis, kk) in k.iter_mut().enumerate().take(self.dim) {
            *kk = self.k_axis(axis, nodes[axis]);
        }
        k
    }

    /// Position of a node of the dual grid; components beyond `dim` are zero.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let nodes = self.unravel(idx);
        let mut x = [0.0; 3];
        for (axis, xx) in x.iter_mut().enumerate().take(self.dim) {
            *xx = self.x_axis(nodes[axis]);
        }
        x
    }

    /// Nearest node to a wave vector (clamped to the grid).
    pub fn nearest_node(&self, k: [f64; 3]) -> usize {
        let mut nodes = [0usize; 3];
        for axis in 0..self.dim {
            let j = ((k[axis] - self.offset[axis]) / self.spacing).round() + (self.points / 2) as f64;
            nodes[axis] = j.clamp(0.0, (self.points - 1) as f64) as usize;
        }
        self.ravel(nodes)
    }

    /// True when the node lies within `margin` nodes of a grid face.
    pub fn in_margin(&self, idx: usize, margin: usize) -> bool {
        let nodes = self.unravel(idx);
        nodes[..self.dim]
            .iter()
            .any(|&j| j < margin || j >= self.points - margin)
    }

    /// Largest |k| reached anywhere on the grid.
    pub fn max_wavenumber(&self) -> f64 {
        (0..self.dim)
            .map(|axis| {
                let (lo, hi) = self.k_range(axis);
                lo.abs().max(hi.abs()).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest magnitude over nodes inside the boundary margin.
    pub fn margin_max(&self, values: &[num_complex::Complex64], margin: usize) -> f64 {
        values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.in_margin(*i, margin))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let g = KGrid::one_d(16, 0.5, 2.0).unwrap();
        assert_eq!(g.k_axis(0, 8), 2.0);
        assert_eq!(g.k_axis(0, 0), 2.0 - 4.0);
        assert_eq!(g.x_axis(8), 0.0);
        assert!((g.x_spacing() * g.spacing() * 16.0 - 2.0 * PI).abs() < 1e-14);
        assert_eq!(g.nearest_node([2.1, 0.0, 0.0]), 8);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = KGrid::three_d(12, 0.1, [0.0; 3]).unwrap();
        for idx in [0, 1, 13, 12 * 12 * 5 + 7, g.len() - 1] {
            assert_eq!(g.ravel(g.unravel(idx)), idx);
        }
        let k = g.wave_vector(g.ravel([6, 7, 5]));
        assert!((k[0]).abs() < 1e-15 && (k[1] - 0.1).abs() < 1e-15 && (k[2] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        assert!(KGrid::one_d(15, 0.1, 0.0).is_err());
        assert!(KGrid::one_d(4, 0.1, 0.0).is_err());
        assert!(KGrid::one_d(16, 0.0, 0.0).is_err());
        assert!(KGrid::one_d(16, 0.1, 0.05).is_err());
        assert!(KGrid::new(2, 16, 0.1, [0.0; 3]).is_err());
        assert!(KGrid::new(1, 16, 0.1, [0.0, 0.1, 0.0]).is_err());
    }

    #[test]
    fn margin_detection() {
        let g = KGrid::one_d(16, 1.0, 0.0).unwrap();
        assert!(g.in_margin(3, 4));
        assert!(!g.in_margin(4, 4));
        assert!(!g.in_margin(11, 4));
        assert!(g.in_margin(12, 4));
    }
}
