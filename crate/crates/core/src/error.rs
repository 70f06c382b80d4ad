use thiserror::Error;

use crate::pulses::Channel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),

    #[error("the four-level model needs spectator level data")]
    MissingSpectator,

    #[error("dimension mismatch: {matrix}x{matrix} matrix but {energies} level energies")]
    DimensionMismatch { matrix: usize, energies: usize },

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("integration window [{start}, {end}] is inverted")]
    InvertedWindow { start: f64, end: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("dipole for channel {0} must be positive")]
    ZeroDipole(Channel),

    #[error("detuning compensation out of range (exponent {0:.1} > 700)")]
    CompensationOutOfRange(f64),

    #[error("channel roles do not match the design target: {0}")]
    ChannelMismatch(String),

    #[error("stage order violated: {0}")]
    StageOrder(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time step {dt:.3e} ns too coarse; limit is {limit:.3e} ns")]
    GridTooCoarse { dt: f64, limit: f64 },

    #[error("state became non-finite at t = {t} ns")]
    NonFiniteState { t: f64 },

    #[error("norm drift {drift:.3e} exceeds {limit:.0e}")]
    NormDrift { drift: f64, limit: f64 },
}

impl Error {
    /// Failures of the integrator itself rather than of its inputs.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::NonFiniteState { .. } | Error::NormDrift { .. })
    }
}
