//! Centered discrete Fourier transforms between a `KGrid` and its dual
//! position grid.
//!
//! `from_modes` evaluates `psi(x_m) = sum_j c_j exp(i k_j . x_m)` and
//! `to_modes` is its exact inverse. The window of wavenumbers is the grid's
//! own node set shifted by `offset`: fields built from a packet use the
//! grid offset, real-valued potentials use a zero offset.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::grid::KGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

// in-place FFT along every axis of a row-major cube
fn transform_axes(grid: &KGrid, data: &mut [C64], dir: Direction) {
    let n = grid.points();
    let (fwd, inv) = plans(n);
    let plan = match dir {
        Direction::Forward => fwd,
        Direction::Inverse => inv,
    };
    if grid.dim() == 1 {
        plan.process(data);
        return;
    }
    // last axis is contiguous
    plan.process(data);
    let mut line = vec![C64::new(0.0, 0.0); n];
    let axis1: Vec<usize> = (0..n).flat_map(|i| (0..n).map(move |l| i * n * n + l)).collect();
    let axis0: Vec<usize> = (0..n * n).collect();
    for (starts, stride) in [(axis1, n), (axis0, n * n)] {
        for s in starts {
            for (t, v) in line.iter_mut().enumerate() {
                *v = data[s + t * stride];
            }
            plan.process(&mut line);
            for (t, v) in line.iter().enumerate() {
                data[s + t * stride] = *v;
            }
        }
    }
}

// maps node index j to FFT bin (j + N/2) mod N on every axis; an involution for even N
fn shifted_index(grid: &KGrid, idx: usize) -> usize {
    let n = grid.points();
    let mut nodes = grid.unravel(idx);
    for node in nodes.iter_mut().take(grid.dim()) {
        *node = (*node + n / 2) % n;
    }
    grid.ravel(nodes)
}

fn offset_phase(grid: &KGrid, idx: usize, offset: [f64; 3], sign: f64) -> C64 {
    let x = grid.position(idx);
    let arg: f64 = (0..grid.dim()).map(|a| offset[a] * x[a]).sum();
    C64::from_polar(1.0, sign * arg)
}

fn has_offset(grid: &KGrid, offset: [f64; 3]) -> bool {
    offset[..grid.dim()].iter().any(|&o| o != 0.0)
}

/// `psi(x_m) = sum_j c_j exp(i k_j . x_m)` with `k_j` the grid nodes shifted to `offset`.
pub fn from_modes_with(grid: &KGrid, modes: &[C64], offset: [f64; 3]) -> Vec<C64> {
    assert_eq!(modes.len(), grid.len());
    let mut buf = vec![C64::new(0.0, 0.0); modes.len()];
    for (idx, &c) in modes.iter().enumerate() {
        buf[shifted_index(grid, idx)] = c;
    }
    transform_axes(grid, &mut buf, Direction::Inverse);
    let mut out: Vec<C64> = (0..modes.len()).map(|idx| buf[shifted_index(grid, idx)]).collect();
    if has_offset(grid, offset) {
        for (idx, v) in out.iter_mut().enumerate() {
            *v *= offset_phase(grid, idx, offset, 1.0);
        }
    }
    out
}

/// Inverse of [`from_modes_with`].
pub fn to_modes_with(grid: &KGrid, field: &[C64], offset: [f64; 3]) -> Vec<C64> {
    assert_eq!(field.len(), grid.len());
    let shifted = has_offset(grid, offset);
    let mut buf = vec![C64::new(0.0, 0.0); field.len()];
    for (idx, &v) in field.iter().enumerate() {
        let v = if shifted {
            v * offset_phase(grid, idx, offset, -1.0)
        } else {
            v
        };
        buf[shifted_index(grid, idx)] = v;
    }
    transform_axes(grid, &mut buf, Direction::Forward);
    let scale = 1.0 / field.len() as f64;
    (0..field.len())
        .map(|idx| buf[shifted_index(grid, idx)] * scale)
        .collect()
}

pub fn from_modes(grid: &KGrid, modes: &[C64]) -> Vec<C64> {
    from_modes_with(grid, modes, grid.offset())
}

pub fn to_modes(grid: &KGrid, field: &[C64]) -> Vec<C64> {
    to_modes_with(grid, field, grid.offset())
}

/// Wavenumber of mode `idx` along `axis` in the window centred at `offset`.
pub fn window_k(grid: &KGrid, idx: usize, axis: usize, offset: [f64; 3]) -> f64 {
    let j = grid.unravel(idx)[axis];
    offset[axis] + (j as f64 - (grid.points() / 2) as f64) * grid.spacing()
}

/// Spectral `d/dx_axis` of a field whose spectrum lives in the grid's window.
pub fn derivative(grid: &KGrid, field: &[C64], axis: usize) -> Vec<C64> {
    derivative_with(grid, field, axis, grid.offset())
}

pub fn derivative_with(grid: &KGrid, field: &[C64], axis: usize, offset: [f64; 3]) -> Vec<C64> {
    let mut modes = to_modes_with(grid, field, offset);
    for (idx, c) in modes.iter_mut().enumerate() {
        *c *= C64::new(0.0, window_k(grid, idx, axis, offset));
    }
    from_modes_with(grid, &modes, offset)
}

/// Spectral derivative of a real, zero-centred function. The unpaired
/// Nyquist mode is dropped so the result stays real.
pub fn derivative_real(grid: &KGrid, values: &[f64], axis: usize) -> Vec<f64> {
    let field: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let zero = [0.0; 3];
    let mut modes = to_modes_with(grid, &field, zero);
    for (idx, c) in modes.iter_mut().enumerate() {
        if grid.unravel(idx)[axis] == 0 {
            *c = C64::new(0.0, 0.0);
        } else {
            *c *= C64::new(0.0, window_k(grid, idx, axis, zero));
        }
    }
    from_modes_with(grid, &modes, zero).iter().map(|v| v.re).collect()
}

/// Fraction of the power of a real, zero-centred function carried by modes
/// above `fraction` of the Nyquist wavenumber on any axis.
pub fn high_frequency_fraction(grid: &KGrid, values: &[f64], fraction: f64) -> f64 {
    let field: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let modes = to_modes_with(grid, &field, [0.0; 3]);
    let nyquist = (grid.points() / 2) as f64 * grid.spacing();
    let mut total = 0.0;
    let mut high = 0.0;
    for (idx, c) in modes.iter().enumerate() {
        let p = c.norm_sqr();
        total += p;
        let above = (0..grid.dim()).any(|a| window_k(grid, idx, a, [0.0; 3]).abs() > fraction * nyquist);
        if above {
            high += p;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        high / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(grid: &KGrid, modes: &[C64]) -> Vec<C64> {
        (0..grid.len())
            .map(|m| {
                let x = grid.position(m);
                modes
                    .iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let k = grid.wave_vector(j);
                        let arg: f64 = (0..grid.dim()).map(|a| k[a] * x[a]).sum();
                        c * C64::from_polar(1.0, arg)
                    })
                    .sum()
            })
            .collect()
    }

    fn pseudo_random(n: usize) -> Vec<C64> {
        (0..n)
            .map(|i| {
                let a = ((i * 7919 + 13) % 101) as f64 / 101.0 - 0.5;
                let b = ((i * 104729 + 7) % 97) as f64 / 97.0 - 0.5;
                C64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_1d_with_offset() {
        let g = KGrid::one_d(32, 0.25, 3.0).unwrap();
        let modes = pseudo_random(g.len());
        let fast = from_modes(&g, &modes);
        let slow = direct(&g, &modes);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = to_modes(&g, &fast);
        for (a, b) in back.iter().zip(&modes) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_direct_sum_3d() {
        let g = KGrid::three_d(10, 0.3, [0.3, -0.6, 0.0]).unwrap();
        let modes = pseudo_random(g.len());
        let fast = from_modes(&g, &modes);
        let slow = direct(&g, &modes);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
        let back = to_modes(&g, &fast);
        let err = back.iter().zip(&modes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = KGrid::one_d(64, 0.1, 1.0).unwrap();
        let k = g.k_axis(0, 40);
        let psi: Vec<C64> = (0..g.len()).map(|m| C64::from_polar(1.0, k * g.x_axis(m))).collect();
        let d = derivative(&g, &psi, 0);
        for (dv, v) in d.iter().zip(&psi) {
            assert!((dv - C64::new(0.0, k) * v).norm() < 1e-11);
        }
    }

    #[test]
    fn real_derivative_of_smooth_function() {
        let g = KGrid::one_d(128, 0.2, 0.0).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|m| (-(g.x_axis(m) / 3.0).powi(2)).exp()).collect();
        let d = derivative_real(&g, &f, 0);
        for m in 0..g.len() {
            let x = g.x_axis(m);
            let exact = -2.0 * x / 9.0 * (-(x / 3.0).powi(2)).exp();
            assert!((d[m] - exact).abs() < 1e-10);
        }
        assert!(high_frequency_fraction(&g, &f, 0.8) < 1e-20);
    }
}
