use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chain length {0}: must be between 1 and {max}", max = crate::basis::MAX_CHAIN_LENGTH)]
    InvalidChainLength(usize),

    #[error("excitation number {value} out of range for {species} register of {modes} modes")]
    ExcitationOutOfRange {
        species: &'static str,
        value: usize,
        modes: usize,
    },

    #[error("configuration (tau={tau:#b}, upsilon={upsilon:#b}) is not a member of the sector")]
    NotInSector { tau: u32, upsilon: u32 },

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("incompatible sectors: {0}")]
    IncompatibleSectors(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNoConvergence { sweeps: usize, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ragged input: {0}")]
    Ragged(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
