//! Numerical engine for the secrecy message capacity of a passive decoy-state
//! quantum secure direct communication protocol with a heralded single-photon
//! source, alongside a weak-coherent-pulse baseline.
//!
//! The analytic chain runs source statistics -> link model -> gains and QBERs
//! -> passive decoy-state bounds -> capacity. An event-level Monte Carlo
//! simulator cross-validates every closed form, and the optimize module covers
//! intensity optimization and maximal-distance root finding.

pub mod capacity;
pub mod decoy;
pub mod error;
pub mod link;
pub mod mc;
pub mod optimize;
pub mod rates;
pub mod source;

pub use capacity::{
    binary_entropy, capacity, dl04_capacity, protocol_capacity, CapacityPoint, EventCapacity, Mode,
    Protocol,
};
pub use decoy::{
    check_monotonicity, estimate_bounds, estimate_bounds_vacuum_weak, ideal_bounds, DecoyBounds,
    DecoyInputs,
};
pub use error::{Error, Result};
pub use link::{
    channel_transmittance, error_yield_n, overall_efficiency, yield_n, Leg, LinkParams, E0,
};
pub use mc::{estimate_vs_model, run as mc_run, ComparisonRow, McConfig, McEstimate};
pub use optimize::{max_distance, optimal_mu, OptResult, RootResult, CAPACITY_FLOOR};
pub use rates::{eve_gains, gain, qber, rate_set, EveRates, RateSet};
pub use source::{
    gamma, heralded_dist, loss_factors, poisson_dist, HeraldEvent, LossFactors, PhotonDist,
    SourceParams,
};
