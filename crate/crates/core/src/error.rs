//! Error types shared across the engine.

use crate::source::HeraldEvent;
use thiserror::Error;

/// Errors produced by the model chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical parameter is outside its admissible range.
    #[error("parameter `{field}` = {value} is invalid: {constraint}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The truncated photon-number distribution leaves too much tail mass.
    #[error("truncation at n_max = {n_max} leaves tail mass {tail:e} > {tol:e} of the event probability")]
    Truncation { n_max: usize, tail: f64, tol: f64 },

    /// A photon-number weight came out more negative than cancellation noise allows.
    #[error("weight q(n = {n}) = {value:e} is negative beyond the cancellation tolerance")]
    NegativeWeight { n: usize, value: f64 },

    /// An event has zero probability, so conditional rates are undefined.
    #[error("herald event {event:?} has zero probability; conditional rates are undefined")]
    DegenerateEvent { event: HeraldEvent },

    /// The overall gain vanishes, so the QBER is undefined.
    #[error("overall gain for event {event:?} is zero; QBER is undefined")]
    ZeroGain { event: HeraldEvent },

    /// Every admissible estimator pair has a vanishing denominator.
    #[error("decoy estimation is degenerate: all pair denominators vanish")]
    DegenerateSource,

    /// The decoy estimator cannot produce a usable bound.
    #[error("decoy estimation failed: {reason}")]
    EstimationFailure { reason: &'static str },

    /// Binary entropy was called outside [0, 1].
    #[error("binary entropy argument {0} is outside [0, 1]")]
    EntropyDomain(f64),

    /// The intensity scan found no operating point with positive capacity.
    #[error("no positive capacity anywhere on the intensity grid")]
    NoPositiveCapacity,

    /// Capacity at zero attenuation is already below the requested floor.
    #[error("capacity at zero attenuation is below the floor; nothing to bisect")]
    ProtocolDead,
}

pub type Result<T> = std::result::Result<T, Error>;
