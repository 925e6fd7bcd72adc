use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid physical constants: {0}")]
    InvalidConstants(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),
    #[error("amplitude {max_amplitude:e} inside the {margin}-node boundary margin exceeds {tolerance:e}")]
    BoundaryLeakage {
        max_amplitude: f64,
        margin: usize,
        tolerance: f64,
    },
    #[error("angular weight vanishes on every grid node")]
    ZeroWeight,
    #[error("amplitudes are identically zero")]
    ZeroNorm,
    #[error("time-derivative data of order {order} is not available for this field")]
    MissingPacket { order: usize },
    #[error("operation requires dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field is not localized: |psi| = {max_amplitude:e} inside the boundary margin")]
    Delocalized { max_amplitude: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("gauge function is not smooth: {fraction:e} of its power lies above 0.8 Nyquist")]
    RoughLambda { fraction: f64 },
    #[error("potential is not smooth: {fraction:e} of its power lies above 0.8 Nyquist")]
    RoughPotential { fraction: f64 },
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    UnstableStep { dt: f64, bound: f64 },
    #[error("coupled Klein-Gordon stepping supports scalar potentials only")]
    NonzeroVectorPotential,
    #[error("split-step Schrodinger stepping supports uniform vector potentials only")]
    NonuniformVectorPotential,
    #[error("packet is too relativistic: hbar|k|/(mc) = {ratio} > {limit}")]
    TooRelativistic { ratio: f64, limit: f64 },
    #[error("node {node} carries amplitude but belongs to no detector bin")]
    PartitionGap { node: usize },
    #[error("bin {bin} has zero detection probability")]
    ZeroBin { bin: usize },
    #[error("bin index {bin} out of range for {bins} bins")]
    InvalidBin { bin: usize, bins: usize },
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
