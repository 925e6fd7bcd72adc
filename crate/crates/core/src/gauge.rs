//! Electromagnetic connection, covariant derivative, curvature and the
//! current identity.
//!
//! Index conventions: metric `(+, -, -, -)`, `x^0 = c t`. An [`EMPotential`]
//! stores the scalar potential `phi` and the contravariant vector potential
//! `A^i`; the lower components are `A_0 = phi / c` and `A_i = -A^i`. The
//! covariant derivative is `D_mu = d_mu + i (q/hbar) A_mu`, and a gauge
//! transformation acts as `psi -> exp(-i (q/hbar) lambda) psi`,
//! `A_mu -> A_mu + d_mu lambda`.

use std::io::BufRead;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::{KGrid, BOUNDARY_MARGIN};
use crate::io;
use crate::noether::{current_density, FourVector};
use crate::packet::{synthesize, MomentumPacket};
use crate::spectral;

/// Largest power fraction allowed above 0.8 of the Nyquist wavenumber.
pub const SMOOTHNESS_TOLERANCE: f64 = 1e-8;
const SMOOTHNESS_CUTOFF: f64 = 0.8;

fn rough_fraction(grid: &KGrid, values: &[f64]) -> f64 {
    spectral::high_frequency_fraction(grid, values, SMOOTHNESS_CUTOFF)
}

/// Static potential sampled on the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EMPotential {
    grid: KGrid,
    phi: Vec<f64>,
    vector: Vec<Vec<f64>>,
}

impl EMPotential {
    /// `vector[i]` holds the contravariant component `A^(i+1)`; one entry per grid axis.
    pub fn new(grid: KGrid, phi: Vec<f64>, vector: Vec<Vec<f64>>) -> Result<Self> {
        if vector.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: vector.len(),
            });
        }
        for comp in std::iter::once(&phi).chain(&vector) {
            if comp.len() != grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "potential has {} samples, grid has {}",
                    comp.len(),
                    grid.len()
                )));
            }
            if comp.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("potential has non-finite samples".into()));
            }
            let fraction = rough_fraction(&grid, comp);
            if fraction >= SMOOTHNESS_TOLERANCE {
                return Err(Error::RoughPotential { fraction });
            }
        }
        Ok(EMPotential { grid, phi, vector })
    }

    pub fn zero(grid: &KGrid) -> Self {
        EMPotential {
            grid: *grid,
            phi: vec![0.0; grid.len()],
            vector: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn scalar(grid: &KGrid, phi: Vec<f64>) -> Result<Self> {
        Self::new(*grid, phi, vec![vec![0.0; grid.len()]; grid.dim()])
    }

    /// Spatially constant contravariant `A`.
    pub fn uniform_vector(grid: &KGrid, a: [f64; 3]) -> Self {
        EMPotential {
            grid: *grid,
            phi: vec![0.0; grid.len()],
            vector: (0..grid.dim()).map(|i| vec![a[i]; grid.len()]).collect(),
        }
    }

    /// Builds from lower components `A_mu`, `mu = 0..=dim`.
    pub fn from_lower(grid: &KGrid, lower: Vec<Vec<f64>>, c: f64) -> Result<Self> {
        if lower.len() != grid.dim() + 1 {
            return Err(Error::DimensionMismatch {
                expected: grid.dim() + 1,
                found: lower.len(),
            });
        }
        let mut it = lower.into_iter();
        let phi = it.next().unwrap().into_iter().map(|a0| a0 * c).collect();
        let vector = it.map(|ai| ai.into_iter().map(|v| -v).collect()).collect();
        Self::new(*grid, phi, vector)
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Contravariant `A^(axis+1)`.
    pub fn vector(&self, axis: usize) -> &[f64] {
        &self.vector[axis]
    }

    /// Lower component `A_mu`.
    pub fn lower(&self, mu: usize, c: f64) -> Vec<f64> {
        match mu {
            0 => self.phi.iter().map(|p| p / c).collect(),
            i => self.vector[i - 1].iter().map(|a| -a).collect(),
        }
    }

    pub fn has_vector_potential(&self) -> bool {
        self.vector.iter().any(|c| c.iter().any(|&v| v != 0.0))
    }

    /// The constant contravariant `A` if every component is spatially uniform.
    pub fn uniform_vector_value(&self) -> Option<[f64; 3]> {
        let mut out = [0.0; 3];
        for (axis, comp) in self.vector.iter().enumerate() {
            let first = comp[0];
            if comp.iter().any(|&v| v != first) {
                return None;
            }
            out[axis] = first;
        }
        Some(out)
    }

    /// Reads columns `phi` and optionally `a_x`, `a_y`, `a_z` in grid order.
    pub fn from_table<R: BufRead>(grid: &KGrid, r: R) -> Result<Self> {
        let table = io::read_table(r)?;
        if table.rows.len() != grid.len() {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                grid.len(),
                table.rows.len()
            )));
        }
        let phi = table.column("phi").unwrap_or_else(|| vec![0.0; grid.len()]);
        let vector = ["a_x", "a_y", "a_z"][..grid.dim()]
            .iter()
            .map(|h| table.column(h).unwrap_or_else(|| vec![0.0; grid.len()]))
            .collect();
        Self::new(*grid, phi, vector)
    }

    pub fn write_table<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let d = self.grid.dim();
        let mut headers: Vec<&str> = ["x", "y", "z"][..d].to_vec();
        headers.push("phi");
        headers.extend(&["a_x", "a_y", "a_z"][..d]);
        let rows: Vec<Vec<f64>> = (0..self.grid.len())
            .map(|i| {
                let x = self.grid.position(i);
                let mut row = x[..d].to_vec();
                row.push(self.phi[i]);
                row.extend(self.vector.iter().map(|c| c[i]));
                row
            })
            .collect();
        io::write_table(w, &headers, &rows)
    }
}

/// Super-Gaussian window `prod_a exp(-(x_a / R)^6)` with `R = fraction * L / 2`.
pub fn window(grid: &KGrid, fraction: f64) -> Vec<f64> {
    let r = fraction * grid.x_extent() / 2.0;
    (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            (0..grid.dim()).map(|a| (-(x[a] / r).powi(6)).exp()).product()
        })
        .collect()
}

pub const DEFAULT_WINDOW: f64 = 0.6;

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

/// Named potential configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    #[default]
    Zero,
    /// `phi = -E . x`, windowed.
    UniformE {
        e: [f64; 3],
        #[serde(default = "default_window")]
        window: f64,
    },
    /// Lower components `A_1 = -B x_2 / 2`, `A_2 = B x_1 / 2`, windowed (3D).
    UniformB {
        b: f64,
        #[serde(default = "default_window")]
        window: f64,
    },
    /// `q phi = m omega^2 |x|^2 / 2`, windowed.
    Harmonic {
        omega: f64,
        #[serde(default = "default_window")]
        window: f64,
    },
    /// Constant scalar potential.
    ConstantPhi { phi: f64 },
    /// Constant contravariant vector potential.
    UniformA { a: [f64; 3] },
    /// Columnar file with `phi` and optional `a_x`, `a_y`, `a_z` columns.
    File { path: PathBuf },
}

impl PotentialSpec {
    pub fn build(&self, grid: &KGrid, constants: &PhysicalConstants) -> Result<EMPotential> {
        let d = grid.dim();
        match self {
            PotentialSpec::Zero => Ok(EMPotential::zero(grid)),
            PotentialSpec::UniformE { e, window: f } => {
                let w = window(grid, *f);
                let phi = (0..grid.len())
                    .map(|i| {
                        let x = grid.position(i);
                        -(0..d).map(|a| e[a] * x[a]).sum::<f64>() * w[i]
                    })
                    .collect();
                EMPotential::scalar(grid, phi)
            }
            PotentialSpec::UniformB { b, window: f } => {
                if d != 3 {
                    return Err(Error::DimensionMismatch { expected: 3, found: d });
                }
                let w = window(grid, *f);
                let mut lower = vec![vec![0.0; grid.len()]; 4];
                for i in 0..grid.len() {
                    let x = grid.position(i);
                    lower[1][i] = -b * x[1] / 2.0 * w[i];
                    lower[2][i] = b * x[0] / 2.0 * w[i];
                }
                EMPotential::from_lower(grid, lower, constants.c)
            }
            PotentialSpec::Harmonic { omega, window: f } => {
                let w = window(grid, *f);
                let scale = constants.m * omega * omega / (2.0 * constants.q);
                let phi = (0..grid.len())
                    .map(|i| {
                        let x = grid.position(i);
                        scale * (0..d).map(|a| x[a] * x[a]).sum::<f64>() * w[i]
                    })
                    .collect();
                EMPotential::scalar(grid, phi)
            }
            PotentialSpec::ConstantPhi { phi } => EMPotential::scalar(grid, vec![*phi; grid.len()]),
            PotentialSpec::UniformA { a } => Ok(EMPotential::uniform_vector(grid, *a)),
            PotentialSpec::File { path } => {
                let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                EMPotential::from_table(grid, std::io::BufReader::new(f))
            }
        }
    }
}

fn check_grid(field: &FieldState, em: &EMPotential) -> Result<()> {
    if field.grid() != em.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn covariant_values(field: &FieldState, em: &EMPotential, mu: usize) -> Result<Vec<C64>> {
    check_grid(field, em)?;
    let k = field.constants();
    let gamma = k.coupling();
    let base = match mu {
        0 => field.time_derivative(1)?,
        i if i <= field.grid().dim() => spectral::derivative(field.grid(), field.psi(), i - 1),
        _ => {
            return Err(Error::DimensionMismatch {
                expected: mu,
                found: field.grid().dim(),
            })
        }
    };
    let a = em.lower(mu, k.c);
    Ok(base
        .iter()
        .zip(field.psi())
        .zip(&a)
        .map(|((d, p), am)| d + C64::new(0.0, gamma * am) * p)
        .collect())
}

/// `D_mu psi`. The temporal component needs time data on the field.
pub fn covariant_derivative(field: &FieldState, em: &EMPotential, mu: usize) -> Result<FieldState> {
    let v = covariant_values(field, em, mu)?;
    FieldState::from_samples(*field.grid(), *field.constants(), v, field.t())
}

/// Applies `psi -> exp(-i (q/hbar) lambda) psi`, `A_mu -> A_mu + d_mu lambda`
/// for a static `lambda`.
pub fn gauge_transform(field: &FieldState, em: &EMPotential, lambda: &[f64]) -> Result<(FieldState, EMPotential)> {
    check_grid(field, em)?;
    let grid = field.grid();
    if lambda.len() != grid.len() {
        return Err(Error::InvalidArgument("gauge function has the wrong length".into()));
    }
    let fraction = rough_fraction(grid, lambda);
    if fraction >= SMOOTHNESS_TOLERANCE {
        return Err(Error::RoughLambda { fraction });
    }
    let gamma = field.constants().coupling();
    let phase: Vec<C64> = lambda.iter().map(|l| C64::from_polar(1.0, -gamma * l)).collect();
    let psi = field.modulated(&phase)?;
    let vector = (0..grid.dim())
        .map(|axis| {
            let dl = spectral::derivative_real(grid, lambda, axis);
            em.vector[axis].iter().zip(&dl).map(|(a, d)| a - d).collect()
        })
        .collect();
    let em2 = EMPotential {
        grid: *grid,
        phi: em.phi.clone(),
        vector,
    };
    Ok((psi, em2))
}

/// Antisymmetric `F_{mu nu}` (lower indices) per node, stored for `mu < nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    grid: KGrid,
    upper: Vec<Vec<f64>>,
}

fn pair_index(n: usize, mu: usize, nu: usize) -> usize {
    // position of (mu, nu), mu < nu, in row-major upper-triangle order
    mu * (2 * n - mu - 1) / 2 + (nu - mu - 1)
}

impl CurvatureTensor {
    /// Builds from a closure giving `F_{mu nu}` at node `idx` for `mu < nu`.
    pub fn from_components(grid: &KGrid, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let n = grid.dim() + 1;
        let mut upper = Vec::new();
        for mu in 0..n {
            for nu in mu + 1..n {
                upper.push((0..grid.len()).map(|i| f(mu, nu, i)).collect());
            }
        }
        CurvatureTensor { grid: *grid, upper }
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    /// Spacetime dimension `d + 1`.
    pub fn rank(&self) -> usize {
        self.grid.dim() + 1
    }

    pub fn component(&self, mu: usize, nu: usize) -> Vec<f64> {
        let n = self.rank();
        match mu.cmp(&nu) {
            std::cmp::Ordering::Equal => vec![0.0; self.grid.len()],
            std::cmp::Ordering::Less => self.upper[pair_index(n, mu, nu)].clone(),
            std::cmp::Ordering::Greater => self.upper[pair_index(n, nu, mu)].iter().map(|v| -v).collect(),
        }
    }

    /// Largest `|F_{mu nu}|` over all components and nodes.
    pub fn max_abs(&self) -> f64 {
        self.upper.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &CurvatureTensor) -> f64 {
        self.upper
            .iter()
            .flatten()
            .zip(other.upper.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Curvature of a static potential: `F_{0i} = -d_i phi / c`, `F_ij = d_i A_j - d_j A_i`.
pub fn curvature(em: &EMPotential, constants: &PhysicalConstants) -> CurvatureTensor {
    let grid = em.grid();
    let d = grid.dim();
    let c = constants.c;
    let lower: Vec<Vec<f64>> = (0..=d).map(|mu| em.lower(mu, c)).collect();
    // grads[mu][i] = d_(i+1) A_mu
    let grads: Vec<Vec<Vec<f64>>> = lower
        .iter()
        .map(|a| (0..d).map(|axis| spectral::derivative_real(grid, a, axis)).collect())
        .collect();
    let n = d + 1;
    let mut upper = Vec::new();
    for mu in 0..n {
        for nu in mu + 1..n {
            let comp: Vec<f64> = if mu == 0 {
                grads[0][nu - 1].iter().map(|v| -v).collect()
            } else {
                grads[nu][mu - 1].iter().zip(&grads[mu][nu - 1]).map(|(a, b)| a - b).collect()
            };
            upper.push(comp);
        }
    }
    CurvatureTensor { grid: *grid, upper }
}

fn levi_civita(idx: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            match idx[i].cmp(&idx[j]) {
                std::cmp::Ordering::Equal => return 0.0,
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}

/// Max over interior nodes of `|eps^{a b m n} d_b F_{m n}|` for a static field (3D only).
pub fn bianchi_residual(f: &CurvatureTensor) -> Result<f64> {
    let grid = f.grid();
    if grid.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: grid.dim(),
        });
    }
    // dF[b][m][n] = d_b F_mn for spatial b
    let mut df = vec![vec![vec![None; 4]; 4]; 4];
    for (b, row) in df.iter_mut().enumerate().skip(1) {
        for m in 0..4 {
            for n in m + 1..4 {
                row[m][n] = Some(spectral::derivative_real(grid, &f.component(m, n), b - 1));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        if grid.in_margin(idx, BOUNDARY_MARGIN) {
            continue;
        }
        for alpha in 0..4 {
            let mut s = 0.0;
            for b in 1..4 {
                for m in 0..4 {
                    for n in m + 1..4 {
                        let e = levi_civita([alpha, b, m, n]);
                        if e != 0.0 {
                            // F antisymmetric: the (n, m) term doubles the (m, n) term
                            s += 2.0 * e * df[b][m][n].as_ref().unwrap()[idx];
                        }
                    }
                }
            }
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}

/// Charge from the minimally coupled current `j^0 = -2 hbar Im(psi* D^0 psi)`.
pub fn coupled_charge(field: &FieldState, em: &EMPotential) -> Result<f64> {
    let d0 = covariant_values(field, em, 0)?;
    let hbar = field.constants().hbar;
    let s: f64 = field.psi().iter().zip(&d0).map(|(p, d)| -2.0 * hbar * (p.conj() * d).im).sum();
    Ok(s * field.grid().x_cell())
}

/// Kinetic four-momentum with `D` in place of `d`.
pub fn coupled_momentum(field: &FieldState, em: &EMPotential) -> Result<FourVector> {
    let k = field.constants();
    let mu2 = k.compton_wavenumber().powi(2);
    let d0 = covariant_values(field, em, 0)?;
    let cell = field.grid().x_cell();
    let mut p0: f64 = field
        .psi()
        .iter()
        .zip(&d0)
        .map(|(p, t)| t.norm_sqr() + mu2 * p.norm_sqr())
        .sum();
    let mut p = [0.0; 4];
    for axis in 1..=field.grid().dim() {
        let di = covariant_values(field, em, axis)?;
        p0 += di.iter().map(|z| z.norm_sqr()).sum::<f64>();
        p[axis] = -2.0 * k.hbar * d0.iter().zip(&di).map(|(t, g)| (t.conj() * g).re).sum::<f64>() * cell;
    }
    p[0] = k.hbar * p0 * cell;
    Ok(FourVector(p))
}

/// Gaussian bump `exp(-|x - x0|^2 / (2 w^2))` on the position grid.
pub fn gaussian_bump(grid: &KGrid, center: [f64; 3], width: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let r2: f64 = (0..grid.dim()).map(|a| (x[a] - center[a]).powi(2)).sum();
            (-r2 / (2.0 * width * width)).exp()
        })
        .collect()
}

/// Outcome of a current-identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentIdentity {
    /// Central difference of the action along the bump.
    pub central: f64,
    /// One-sided difference, for comparison.
    pub forward: f64,
    /// `-(q/hbar) sum bump j^mu dx^d`.
    pub expected: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub forward_rel_error: f64,
}

/// Sum of `L_D = hbar (|D_0 psi|^2 - sum |D_i psi|^2 - mu^2 |psi|^2)` with
/// `A_mu = eps * bump` in the single component `mu` and all others zero.
fn perturbed_action(psi: &[C64], grads: &[Vec<C64>], mu: usize, eps: f64, bump: &[f64], k: &PhysicalConstants, cell: f64) -> f64 {
    let gamma = k.coupling();
    let mu2 = k.compton_wavenumber().powi(2);
    let mut s = 0.0;
    for i in 0..psi.len() {
        let mut l = -mu2 * psi[i].norm_sqr();
        for (nu, g) in grads.iter().enumerate() {
            let a = if nu == mu { eps * bump[i] } else { 0.0 };
            let d = g[i] + C64::new(0.0, gamma * a) * psi[i];
            l += if nu == 0 { d.norm_sqr() } else { -d.norm_sqr() };
        }
        s += l;
    }
    k.hbar * s * cell
}

/// Compares the derivative of the coupled action with respect to `A_mu`
/// along `bump` at `A = 0` against `-(q/hbar) sum bump j^mu`.
pub fn current_identity_check(packet: &MomentumPacket, mu: usize, eps: f64, bump: &[f64]) -> Result<CurrentIdentity> {
    let grid = packet.grid();
    if mu > grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu,
            found: grid.dim(),
        });
    }
    if bump.len() != grid.len() {
        return Err(Error::InvalidArgument("bump has the wrong length".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let field = synthesize(packet, 0.0);
    let k = packet.constants();
    let cell = grid.x_cell();
    let mut grads = vec![field.time_derivative(1)?];
    for axis in 0..grid.dim() {
        grads.push(spectral::derivative(grid, field.psi(), axis));
    }
    let psi = field.psi();
    let s0 = perturbed_action(psi, &grads, mu, 0.0, bump, k, cell);
    let sp = perturbed_action(psi, &grads, mu, eps, bump, k, cell);
    let sm = perturbed_action(psi, &grads, mu, -eps, bump, k, cell);
    let central = (sp - sm) / (2.0 * eps);
    let forward = (sp - s0) / eps;
    let j = current_density(&field, mu)?;
    let expected = -k.coupling() * j.iter().zip(bump).map(|(a, b)| a * b).sum::<f64>() * cell;
    let abs_error = (central - expected).abs();
    let scale = expected.abs();
    let rel = |e: f64| if scale > 0.0 { e / scale } else { e };
    Ok(CurrentIdentity {
        central,
        forward,
        expected,
        abs_error,
        rel_error: rel(abs_error),
        forward_rel_error: rel((forward - expected).abs()),
    })
}
