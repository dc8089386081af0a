use thiserror::Error;

use crate::spinspace::OpKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("beam size must be at least 1 photon, got {0}")]
    InvalidBeamSize(usize),

    #[error("operation not supported for operator kind {0:?}")]
    UnsupportedKind(OpKind),

    #[error("brute-force space too large: N_a + N_b = {got} exceeds {max}")]
    SizeLimit { got: usize, max: usize },

    #[error("hamiltonian does not conserve total m (only circular basis at theta = 0 does)")]
    NotConserving,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state is not normalized: |psi| = {0}")]
    NotNormalized(f64),

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("propagator tolerance not achievable at t = {t}: step {dt:e} below floor")]
    ToleranceNotAchievable { t: f64, dt: f64 },

    #[error("{quantity} drift {drift:e} exceeds budget at t = {t}")]
    DriftExceeded { quantity: &'static str, t: f64, drift: f64 },

    #[error("no zero crossings found in series")]
    NoCrossings,

    #[error("insufficient data: need at least {need}, got {got}")]
    InsufficientPoints { need: usize, got: usize },

    #[error("no plateau found")]
    NoPlateau,

    #[error("CFL violation: dt = {dt} exceeds dz = {dz}")]
    CflViolation { dt: f64, dz: f64 },

    #[error("no steady profile within t_max = {t_max}")]
    NoConvergence { t_max: f64 },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
