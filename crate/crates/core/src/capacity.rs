//! Secrecy message capacity of the heralded protocol and the baseline.
//!
//! Per signal event, the legitimate rate is I(A:B) = Q_bab (1 - h(E_bab)) and
//! the leak bound I(A:E) charges each photon-number class of the first leg:
//! one-photon events leak h(2 e_1), two-photon events half a bit plus half the
//! two-photon entropy term, and three or more photons leak fully. The total
//! capacity sums the clamped per-event differences over the two signal events.

use crate::decoy::{
    estimate_bounds, estimate_bounds_vacuum_weak, ideal_bounds, DecoyBounds, DecoyInputs,
};
use crate::error::{Error, Result};
use crate::link::{overall_efficiency, yield_n, Leg, LinkParams, E0};
use crate::rates::{eve_gains, rate_set, EveRates};
use crate::source::{poisson_dist, HeraldEvent, SourceParams};

/// Decoy-state estimation regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Bounds estimated from the three observable classes.
    Finite,
    /// Ideal bounds (infinite decoy states).
    Infinite,
}

/// Which protocol the capacity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Passive decoy-state protocol with the heralded source.
    Hsps,
    /// Single-photon-based baseline with a weak coherent pulse source.
    Dl04,
}

/// Mutual informations and capacity contribution of one signal event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventCapacity {
    pub iab: f64,
    pub iae: f64,
    /// max(0, iab - iae)
    pub cs: f64,
    pub q_bab: f64,
    pub e_bab: f64,
}

/// Capacity and its ingredients at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPoint {
    pub alpha_bab_db: f64,
    pub mu: f64,
    pub mode: Mode,
    pub protocol: Protocol,
    /// Total mutual information Alice-Bob over the signal events.
    pub iab: f64,
    /// Total leak bound over the signal events.
    pub iae: f64,
    /// Secrecy message capacity, clamped per event before summing.
    pub cs: f64,
    /// First signal event (the only one for the baseline).
    pub x2: EventCapacity,
    /// Second signal event; absent for the baseline.
    pub x3: Option<EventCapacity>,
    /// Bounds in use; `None` when finite-decoy estimation failed (cs = 0).
    pub bounds: Option<DecoyBounds>,
}

/// Binary Shannon entropy in bits; 0 at both endpoints by continuity.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::EntropyDomain(x));
    }
    Ok(entropy(x))
}

fn entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Entropy of the doubled error argument, saturated to one full bit once the
/// argument reaches 1/2 (an error bound past that point cannot leak less).
fn leak_entropy(two_e: f64) -> f64 {
    if two_e >= 0.5 {
        1.0
    } else {
        entropy(two_e)
    }
}

/// I(A:B) for one signal event: round-trip gain times the entropy margin.
pub fn mutual_info_ab(
    event: HeraldEvent,
    sp: &SourceParams,
    lp: &LinkParams,
    n_max: usize,
) -> Result<f64> {
    let rs = rate_set(event, Leg::Bab, sp, lp, n_max)?;
    Ok(rs.q * (1.0 - entropy(rs.e)))
}

fn leak_from(eve: &EveRates, bounds: &DecoyBounds) -> f64 {
    eve.n1 * leak_entropy(2.0 * bounds.e1_u.max(0.0))
        + eve.n2 * (0.5 * leak_entropy(2.0 * bounds.e2_u.max(0.0)) + 0.5)
        + eve.n3_plus
}

/// Leak bound I(A:E) for one signal event under the given decoy bounds.
pub fn eve_info(
    event: HeraldEvent,
    sp: &SourceParams,
    lp: &LinkParams,
    bounds: &DecoyBounds,
    ratio: f64,
    n_max: usize,
) -> Result<f64> {
    let eve = eve_gains(event, sp, lp, ratio, n_max)?;
    Ok(leak_from(&eve, bounds))
}

fn bab_rates(
    event: HeraldEvent,
    sp: &SourceParams,
    lp: &LinkParams,
    n_max: usize,
) -> Result<(f64, f64)> {
    match rate_set(event, Leg::Bab, sp, lp, n_max) {
        Ok(rs) => Ok((rs.q, rs.e)),
        // A dead round trip detects nothing; the event contributes no rate.
        Err(Error::ZeroGain { .. }) => Ok((0.0, E0)),
        Err(e) => Err(e),
    }
}

fn finite_or_failed(d: Result<DecoyBounds>) -> Result<Option<DecoyBounds>> {
    match d {
        Ok(b) => Ok(Some(b)),
        Err(Error::EstimationFailure { .. }) | Err(Error::DegenerateSource) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Capacity of the heralded protocol at one operating point.
///
/// Finite mode estimates the bounds from model-generated observables; when the
/// estimation fails, the leak is charged at I(A:B) and the capacity is zero.
pub fn capacity(
    sp: &SourceParams,
    lp: &LinkParams,
    mode: Mode,
    ratio: f64,
    n_max: usize,
) -> Result<CapacityPoint> {
    sp.validate()?;
    lp.validate()?;
    let bounds = match mode {
        Mode::Infinite => Some(ideal_bounds(lp)?),
        Mode::Finite => finite_or_failed(
            DecoyInputs::from_model(sp, lp, n_max).and_then(|d| estimate_bounds(&d)),
        )?,
    };
    let mut events = Vec::with_capacity(2);
    for ev in [HeraldEvent::X2, HeraldEvent::X3] {
        let (q_bab, e_bab) = bab_rates(ev, sp, lp, n_max)?;
        let iab = q_bab * (1.0 - entropy(e_bab));
        let iae = match &bounds {
            Some(b) => {
                let eve = eve_gains(ev, sp, lp, ratio, n_max)?;
                leak_from(&eve, b)
            }
            None => iab,
        };
        events.push(EventCapacity {
            iab,
            iae,
            cs: (iab - iae).max(0.0),
            q_bab,
            e_bab,
        });
    }
    let x3 = events.pop().unwrap();
    let x2 = events.pop().unwrap();
    Ok(CapacityPoint {
        alpha_bab_db: 2.0 * lp.alpha_ba_db,
        mu: sp.mu,
        mode,
        protocol: Protocol::Hsps,
        iab: x2.iab + x3.iab,
        iae: x2.iae + x3.iae,
        cs: x2.cs + x3.cs,
        x2,
        x3: Some(x3),
        bounds,
    })
}

/// Capacity of the weak-coherent-pulse baseline at one operating point.
pub fn dl04_capacity(
    mu: f64,
    lp: &LinkParams,
    mode: Mode,
    ratio: f64,
    n_max: usize,
) -> Result<CapacityPoint> {
    lp.validate()?;
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidParam {
            field: "mu",
            value: mu,
            constraint: "must be finite and non-negative",
        });
    }
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::InvalidParam {
            field: "eve_ratio",
            value: ratio,
            constraint: "must be finite and positive",
        });
    }
    let eta_bab = overall_efficiency(lp, Leg::Bab);
    let q_bab = 1.0 - (1.0 - lp.y0_b) * (-mu * eta_bab).exp();
    let e_bab = if q_bab > 0.0 {
        (E0 * lp.y0_b + lp.e_d_b * (1.0 - (-mu * eta_bab).exp())) / q_bab
    } else {
        E0
    };
    let iab = q_bab * (1.0 - entropy(e_bab));

    let bounds = match mode {
        Mode::Infinite => Some(ideal_bounds(lp)?),
        Mode::Finite => {
            if mu > 0.0 {
                finite_or_failed(
                    DecoyInputs::from_poisson_classes(mu, lp, n_max)
                        .and_then(|d| estimate_bounds_vacuum_weak(&d)),
                )?
            } else {
                None
            }
        }
    };

    let eta_ba = overall_efficiency(lp, Leg::Ba);
    let w = poisson_dist(mu, n_max.max(3))?;
    let total = (1.0 - lp.y0_a) * (1.0 - (-mu * eta_ba).exp());
    let n1 = (w.weight(1) * (yield_n(lp, Leg::Ba, 1) - lp.y0_a)).max(0.0);
    let n2 = (w.weight(2) * (yield_n(lp, Leg::Ba, 2) - lp.y0_a)).max(0.0);
    let eve = EveRates {
        n1: n1 * ratio.max(1.0),
        n2: n2 * ratio.max(1.0),
        n3_plus: (total - n1 - n2).max(0.0) * ratio.max(1.0),
        ratio,
    };
    let iae = match &bounds {
        Some(b) => leak_from(&eve, b),
        None => iab,
    };
    let x2 = EventCapacity {
        iab,
        iae,
        cs: (iab - iae).max(0.0),
        q_bab,
        e_bab,
    };
    Ok(CapacityPoint {
        alpha_bab_db: 2.0 * lp.alpha_ba_db,
        mu,
        mode,
        protocol: Protocol::Dl04,
        iab: x2.iab,
        iae: x2.iae,
        cs: x2.cs,
        x2,
        x3: None,
        bounds,
    })
}

/// Capacity dispatch over the protocol choice.
pub fn protocol_capacity(
    protocol: Protocol,
    sp: &SourceParams,
    lp: &LinkParams,
    mode: Mode,
    ratio: f64,
    n_max: usize,
) -> Result<CapacityPoint> {
    match protocol {
        Protocol::Hsps => capacity(sp, lp, mode, ratio, n_max),
        Protocol::Dl04 => dl04_capacity(sp.mu, lp, mode, ratio, n_max),
    }
}
