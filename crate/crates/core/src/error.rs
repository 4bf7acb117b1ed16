use thiserror::Error;

use crate::measurement::Setting;
use crate::tomography::BasisPair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix entries must be finite")]
    NonFiniteEntry,

    #[error("Pauli index {0} out of range 0..=3")]
    PauliIndex(usize),

    #[error("Bell index {0} out of range 0..=3")]
    BellIndex(usize),

    #[error("measurement axis {0} out of range 1..=3")]
    AxisIndex(usize),

    #[error("basis index {0} out of range 0..=1")]
    BasisIndex(usize),

    #[error("matrix is not unitary: |U†U - I| = {defect:.3e} exceeds {tolerance:.1e}")]
    NonUnitary { defect: f64, tolerance: f64 },

    #[error("matrix is not a proper rotation")]
    NotARotation,

    #[error("matrix is singular (|det| = {det:.3e})")]
    SingularMatrix { det: f64 },

    #[error("non-finite waveplate angle")]
    NonFiniteAngle,

    #[error("state is not normalized: sum |psi|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("state matrix is zero")]
    ZeroState,

    #[error("state matrix is not full rank (|det| = {det:.3e}); the entangled input must be full-rank so that it can be inverted")]
    NotFullRank { det: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("detector efficiency {0} must lie in (0, 1]")]
    InvalidEfficiency(f64),

    #[error("no coincidences recorded for setting {setting}")]
    EmptySetting { setting: Setting },

    #[error("reference probability for {reference} is {p_hat:.3e}, not above the minimum {p_min:.1e}")]
    LowReferenceProbability {
        reference: BasisPair,
        p_hat: f64,
        p_min: f64,
    },

    #[error("bootstrap needs at least 2 resamples, got {0}")]
    TooFewResamples(usize),

    #[error("zero matrix has no phase-invariant overlap")]
    ZeroMatrix,

    #[error("counts table: {0}")]
    CountsFormat(String),
}
