//! Numerical laboratory for charged scalar wave packets coupled to an
//! electromagnetic connection.
//!
//! The crate builds normalized positive-frequency packets in momentum space,
//! evaluates their Noether functionals, audits the gauge structure of the
//! covariant derivative, evolves fields under the Klein-Gordon and minimally
//! coupled Schrodinger equations, and simulates momentum-resolving detector
//! arrays.

pub mod constants;
pub mod error;
pub mod evolution;
pub mod field;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod noether;
pub mod operator;
pub mod packet;
pub mod spectral;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use field::{FieldState, TimeData};
pub use gauge::{CurvatureTensor, EMPotential, PotentialSpec};
pub use grid::KGrid;
pub use noether::FourVector;
pub use operator::OperatorSpec;
pub use packet::{MomentumPacket, PacketSpec, RawAmplitudes};

pub use num_complex::Complex64 as C64;
