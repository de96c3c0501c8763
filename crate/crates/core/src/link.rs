//! Channel and detector model for the two transmission legs.
//!
//! `Ba` is the first pass (Bob to Alice), `Bab` the full round trip after
//! Alice's encoding. Attenuation is quoted one-way in dB; the round trip sees
//! twice that. Yields follow the standard background-plus-loss model and the
//! error model splits clicks between misalignment and dark counts.

use crate::error::{Error, Result};

/// Dark-count error rate: a background click carries a random bit.
pub const E0: f64 = 0.5;

/// Transmission leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    /// First transmission, Bob to Alice.
    Ba,
    /// Round trip, Bob to Alice and back to Bob.
    Bab,
}

/// Channel, optics, and detector parameters for both legs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// One-way channel loss Bob -> Alice in dB.
    pub alpha_ba_db: f64,
    /// Intrinsic optical efficiency on the first pass.
    pub eta_opt_ba: f64,
    /// Intrinsic optical efficiency over the round trip.
    pub eta_opt_bab: f64,
    /// Detection efficiency at Alice.
    pub eta_d_a: f64,
    /// Detection efficiency at Bob.
    pub eta_d_b: f64,
    /// Background detection rate per pulse at Alice.
    pub y0_a: f64,
    /// Background detection rate per pulse at Bob.
    pub y0_b: f64,
    /// Misalignment error rate at Alice.
    pub e_d_a: f64,
    /// Misalignment error rate at Bob.
    pub e_d_b: f64,
}

impl Default for LinkParams {
    /// Simulation defaults at 2 dB one-way (4 dB round trip, about 10 km).
    fn default() -> Self {
        LinkParams {
            alpha_ba_db: 2.0,
            eta_opt_ba: 0.21,
            eta_opt_bab: 0.088,
            eta_d_a: 0.7,
            eta_d_b: 0.7,
            y0_a: 8e-8,
            y0_b: 8e-8,
            e_d_a: 0.0131,
            e_d_b: 0.0026,
        }
    }
}

impl LinkParams {
    pub fn with_alpha_ba_db(mut self, alpha_ba_db: f64) -> Self {
        self.alpha_ba_db = alpha_ba_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha_ba_db.is_finite() || self.alpha_ba_db < 0.0 {
            return Err(Error::InvalidParam {
                field: "alpha_ba_db",
                value: self.alpha_ba_db,
                constraint: "must be finite and non-negative",
            });
        }
        let unit = [
            ("eta_opt_ba", self.eta_opt_ba),
            ("eta_opt_bab", self.eta_opt_bab),
            ("eta_d_a", self.eta_d_a),
            ("eta_d_b", self.eta_d_b),
            ("y0_a", self.y0_a),
            ("y0_b", self.y0_b),
        ];
        for (field, value) in unit {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::InvalidParam {
                    field,
                    value,
                    constraint: "must lie in [0, 1]",
                });
            }
        }
        for (field, value) in [("e_d_a", self.e_d_a), ("e_d_b", self.e_d_b)] {
            if !(0.0..=0.5).contains(&value) || !value.is_finite() {
                return Err(Error::InvalidParam {
                    field,
                    value,
                    constraint: "must lie in [0, 0.5]",
                });
            }
        }
        Ok(())
    }

    /// Background rate of the receiving party on `leg`.
    pub fn y0(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Ba => self.y0_a,
            Leg::Bab => self.y0_b,
        }
    }

    /// Misalignment error rate of the receiving party on `leg`.
    pub fn e_d(&self, leg: Leg) -> f64 {
        match leg {
            Leg::Ba => self.e_d_a,
            Leg::Bab => self.e_d_b,
        }
    }
}

/// Channel transmittance 10^(-alpha/10); the round trip doubles the dB loss.
pub fn channel_transmittance(lp: &LinkParams, leg: Leg) -> f64 {
    let alpha = match leg {
        Leg::Ba => lp.alpha_ba_db,
        Leg::Bab => 2.0 * lp.alpha_ba_db,
    };
    10f64.powf(-alpha / 10.0)
}

/// Overall transmission efficiency: transmittance times optics times detector.
pub fn overall_efficiency(lp: &LinkParams, leg: Leg) -> f64 {
    let (opt, det) = match leg {
        Leg::Ba => (lp.eta_opt_ba, lp.eta_d_a),
        Leg::Bab => (lp.eta_opt_bab, lp.eta_d_b),
    };
    channel_transmittance(lp, leg) * opt * det
}

/// Yield of an n-photon pulse: background or at least one photon surviving.
pub fn yield_n(lp: &LinkParams, leg: Leg, n: u32) -> f64 {
    let eta = overall_efficiency(lp, leg);
    1.0 - (1.0 - lp.y0(leg)) * (1.0 - eta).powi(n as i32)
}

/// Product e_n * Y_n of the error model: dark-count half plus misalignment.
pub fn error_yield_n(lp: &LinkParams, leg: Leg, n: u32) -> f64 {
    let eta = overall_efficiency(lp, leg);
    E0 * lp.y0(leg) + lp.e_d(leg) * (1.0 - (1.0 - eta).powi(n as i32))
}
