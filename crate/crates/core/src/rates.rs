//! Closed-form gains, error rates, and the eavesdropper gain bound.
//!
//! For each herald event the overall gain is Q = 1 - (1 - Y0) * G / P where
//! G = sum_n q(n) (1 - eta)^n is the no-detection generating sum, available in
//! closed form through g(x) = exp(-mu x eta_x eta + mu x - mu). The QBER
//! follows from the additive error model, and the eavesdropper bound keeps the
//! per-photon-number gains above the background level.

use crate::error::{Error, Result};
use crate::link::{overall_efficiency, yield_n, Leg, LinkParams, E0};
use crate::source::{heralded_dist, loss_factors, HeraldEvent, SourceParams};

/// Gains and error rates of one herald event on one leg.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSet {
    pub event: HeraldEvent,
    pub leg: Leg,
    /// Overall gain: detection probability conditioned on the event.
    pub q: f64,
    /// Overall QBER among detections.
    pub e: f64,
    /// Per-photon-number gains q(n) Y_n / P up to the truncation order.
    pub q_n: Vec<f64>,
    /// Product Q * E.
    pub qe: f64,
}

/// Eavesdropper gain bound split by photon number (first leg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveRates {
    /// One-photon gain bound.
    pub n1: f64,
    /// Two-photon gain bound.
    pub n2: f64,
    /// Aggregate bound for three or more photons.
    pub n3_plus: f64,
    /// Configured transmission-efficiency ratio of Eve versus Alice.
    pub ratio: f64,
}

impl EveRates {
    pub fn total(&self) -> f64 {
        self.n1 + self.n2 + self.n3_plus
    }
}

/// No-detection generating sum G = sum_n q(n) (1 - eta)^n in closed form.
fn survival_sum(sp: &SourceParams, event: HeraldEvent, lp: &LinkParams, leg: Leg) -> Result<f64> {
    let lf = loss_factors(sp)?;
    lp.validate()?;
    let eta = overall_efficiency(lp, leg);
    // expression shape matches PureTerm::total so G == P bitwise at eta = 0
    let g = |x: f64| (sp.mu * x - sp.mu * x * sp.eta_x * eta - sp.mu).exp();
    let c1 = (1.0 - sp.d_1) * (1.0 - sp.d_2);
    let c2 = 1.0 - sp.d_2;
    let c3 = 1.0 - sp.d_1;
    let g1 = c1 * g(lf.f);
    Ok(match event {
        HeraldEvent::X1 => g1,
        HeraldEvent::X2 => c2 * g(lf.f1) - g1,
        HeraldEvent::X3 => c3 * g(lf.f2) - g1,
        HeraldEvent::X4 => g(1.0) - c2 * g(lf.f1) - c3 * g(lf.f2) + g1,
    })
}

fn gain_from_parts(p: f64, g_sum: f64, y0: f64) -> f64 {
    1.0 - (1.0 - y0) * g_sum / p
}

/// Full rate set (gain, QBER, per-n gains) for one event and leg.
pub fn rate_set(
    event: HeraldEvent,
    leg: Leg,
    sp: &SourceParams,
    lp: &LinkParams,
    n_max: usize,
) -> Result<RateSet> {
    let dist = heralded_dist(sp, event, n_max)?;
    let p = dist.event_prob();
    if p <= 0.0 {
        return Err(Error::DegenerateEvent { event });
    }
    let g_sum = survival_sum(sp, event, lp, leg)?;
    let q = gain_from_parts(p, g_sum, lp.y0(leg));
    let q_n = (0..=dist.n_max())
        .map(|n| dist.weight(n) * yield_n(lp, leg, n as u32) / p)
        .collect();
    if q <= 0.0 {
        return Err(Error::ZeroGain { event });
    }
    let ed = lp.e_d(leg);
    let e = ((E0 * lp.y0(leg) + ed) * p - ed * g_sum) / (q * p);
    Ok(RateSet {
        event,
        leg,
        q,
        e,
        q_n,
        qe: q * e,
    })
}

/// Overall gain Q for one event and leg.
pub fn gain(event: HeraldEvent, leg: Leg, sp: &SourceParams, lp: &LinkParams) -> Result<f64> {
    let dist = heralded_dist(sp, event, 2)?;
    let p = dist.event_prob();
    if p <= 0.0 {
        return Err(Error::DegenerateEvent { event });
    }
    Ok(gain_from_parts(
        p,
        survival_sum(sp, event, lp, leg)?,
        lp.y0(leg),
    ))
}

/// Overall QBER E for one event and leg.
pub fn qber(event: HeraldEvent, leg: Leg, sp: &SourceParams, lp: &LinkParams) -> Result<f64> {
    let dist = heralded_dist(sp, event, 2)?;
    let p = dist.event_prob();
    if p <= 0.0 {
        return Err(Error::DegenerateEvent { event });
    }
    let g_sum = survival_sum(sp, event, lp, leg)?;
    let q = gain_from_parts(p, g_sum, lp.y0(leg));
    if q <= 0.0 {
        return Err(Error::ZeroGain { event });
    }
    let ed = lp.e_d(leg);
    Ok(((E0 * lp.y0(leg) + ed) * p - ed * g_sum) / (q * p))
}

/// Per-photon-number eavesdropper gain bounds on the first leg.
///
/// Each term is max(0, q(n)/P * (Y_n - Y_0)) * max(1, ratio); the aggregate
/// for n >= 3 comes from the closed-form total sum_n q(n)(Y_n - Y_0)/P =
/// Q - Y_0 minus the low orders, so no truncation tail is dropped from Eve's
/// side.
pub fn eve_gains(
    event: HeraldEvent,
    sp: &SourceParams,
    lp: &LinkParams,
    ratio: f64,
    n_max: usize,
) -> Result<EveRates> {
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::InvalidParam {
            field: "eve_ratio",
            value: ratio,
            constraint: "must be finite and positive",
        });
    }
    let dist = heralded_dist(sp, event, n_max)?;
    let p = dist.event_prob();
    if p <= 0.0 {
        return Err(Error::DegenerateEvent { event });
    }
    let scale = ratio.max(1.0);
    let y0 = lp.y0(Leg::Ba);
    let total = gain_from_parts(p, survival_sum(sp, event, lp, Leg::Ba)?, y0) - y0;
    let per_n = |n: u32| (dist.weight(n as usize) / p * (yield_n(lp, Leg::Ba, n) - y0)).max(0.0);
    let n1 = per_n(1);
    let n2 = per_n(2);
    let n3_plus = (total - n1 - n2).max(0.0);
    Ok(EveRates {
        n1: n1 * scale,
        n2: n2 * scale,
        n3_plus: n3_plus * scale,
        ratio,
    })
}
