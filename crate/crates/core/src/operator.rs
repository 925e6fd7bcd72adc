//! Linear operators acting on fields.
//!
//! Operators are evaluated against the time jet of a field so that
//! compositions with `d/dx^0` stay exact for spectral fields.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::KGrid;
use crate::spectral;

#[derive(Debug, Clone)]
pub enum OperatorSpec {
    Identity,
    /// Multiplication by `x^a`.
    Position(usize),
    /// Canonical momentum `-i hbar d/dx^a`.
    Momentum(usize),
    /// `d/dx^0 = (1/c) d/dt`.
    TimeDerivative,
    /// Multiplication by a fixed function on the position grid.
    Multiply(Arc<[C64]>),
    Scale(C64, Box<OperatorSpec>),
    Sum(Vec<OperatorSpec>),
    /// Applies the listed operators in order: `Chain([A, B])` is `B A`.
    Chain(Vec<OperatorSpec>),
}

struct Ctx<'a> {
    grid: &'a KGrid,
    constants: &'a PhysicalConstants,
}

impl OperatorSpec {
    /// `i hbar d^mu`: the energy-like operator for `mu = 0`, the canonical
    /// momentum for spatial `mu`.
    pub fn four_momentum(mu: usize, constants: &PhysicalConstants) -> OperatorSpec {
        match mu {
            0 => OperatorSpec::Scale(C64::new(0.0, constants.hbar), Box::new(OperatorSpec::TimeDerivative)),
            i => OperatorSpec::Momentum(i - 1),
        }
    }

    /// Orbital angular momentum `(x cross pi)_a`.
    pub fn angular_momentum(a: usize) -> OperatorSpec {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        OperatorSpec::Sum(vec![
            OperatorSpec::Chain(vec![OperatorSpec::Momentum(c), OperatorSpec::Position(b)]),
            OperatorSpec::Scale(
                C64::new(-1.0, 0.0),
                Box::new(OperatorSpec::Chain(vec![OperatorSpec::Momentum(b), OperatorSpec::Position(c)])),
            ),
        ])
    }

    pub fn apply(&self, field: &FieldState) -> Result<Vec<C64>> {
        self.apply_time_derivative(field, 0)
    }

    /// `(d/dx^0)^order (O psi)`.
    pub fn apply_time_derivative(&self, field: &FieldState, order: usize) -> Result<Vec<C64>> {
        let ctx = Ctx {
            grid: field.grid(),
            constants: field.constants(),
        };
        let jet = |n: usize| field.time_derivative(n);
        self.eval(&ctx, &jet, order)
    }

    fn eval(&self, ctx: &Ctx, jet: &dyn Fn(usize) -> Result<Vec<C64>>, order: usize) -> Result<Vec<C64>> {
        match self {
            OperatorSpec::Identity => jet(order),
            OperatorSpec::Position(a) => {
                check_axis(ctx.grid, *a)?;
                let mut v = jet(order)?;
                for (i, z) in v.iter_mut().enumerate() {
                    *z *= ctx.grid.position(i)[*a];
                }
                Ok(v)
            }
            OperatorSpec::Momentum(a) => {
                check_axis(ctx.grid, *a)?;
                let v = jet(order)?;
                let factor = C64::new(0.0, -ctx.constants.hbar);
                Ok(spectral::derivative(ctx.grid, &v, *a).into_iter().map(|z| z * factor).collect())
            }
            OperatorSpec::TimeDerivative => jet(order + 1),
            OperatorSpec::Multiply(f) => {
                if f.len() != ctx.grid.len() {
                    return Err(Error::InvalidArgument(format!(
                        "multiplier has {} samples, grid has {}",
                        f.len(),
                        ctx.grid.len()
                    )));
                }
                let mut v = jet(order)?;
                for (z, m) in v.iter_mut().zip(f.iter()) {
                    *z *= m;
                }
                Ok(v)
            }
            OperatorSpec::Scale(s, inner) => {
                let mut v = inner.eval(ctx, jet, order)?;
                for z in v.iter_mut() {
                    *z *= s;
                }
                Ok(v)
            }
            OperatorSpec::Sum(ops) => {
                let mut acc = vec![C64::new(0.0, 0.0); ctx.grid.len()];
                for op in ops {
                    for (a, b) in acc.iter_mut().zip(op.eval(ctx, jet, order)?) {
                        *a += b;
                    }
                }
                Ok(acc)
            }
            OperatorSpec::Chain(ops) => match ops.split_last() {
                None => jet(order),
                Some((last, rest)) => {
                    let rest = OperatorSpec::Chain(rest.to_vec());
                    let inner = |n: usize| rest.eval(ctx, jet, n);
                    last.eval(ctx, &inner, order)
                }
            },
        }
    }
}

fn check_axis(grid: &KGrid, a: usize) -> Result<()> {
    if a >= grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: a + 1,
            found: grid.dim(),
        });
    }
    Ok(())
}
