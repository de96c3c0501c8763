//! Photon-number statistics of the heralded single-photon source.
//!
//! A pump pulse produces Poisson-distributed photon pairs. One photon of each
//! pair travels the heralded path through a t:(1-t) beam splitter onto two
//! detectors; the click pattern selects one of four herald events. Conditioned
//! on the event, the signal path carries a reshaped photon-number distribution
//! q_{x_i}(n) given in closed form below, together with the total event
//! probability P_{x_i}. The weak-coherent-pulse baseline keeps the plain
//! Poisson distribution.

use crate::error::{Error, Result};

/// Relative tail mass allowed beyond the truncation order.
pub const TAIL_TOL: f64 = 1e-12;
/// Hard ceiling for the automatic truncation-order raise.
pub const N_MAX_CEIL: usize = 60;
/// Weights in [-NEG_CLAMP, 0) are treated as cancellation noise and clamped to 0.
const NEG_CLAMP: f64 = 1e-12;

/// Herald detector response classes.
///
/// `X1` = no click (pulse discarded), `X2` = D1 only, `X3` = D2 only,
/// `X4` = both detectors (decoy state).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeraldEvent {
    X1,
    X2,
    X3,
    X4,
}

impl HeraldEvent {
    pub const ALL: [HeraldEvent; 4] = [
        HeraldEvent::X1,
        HeraldEvent::X2,
        HeraldEvent::X3,
        HeraldEvent::X4,
    ];

    /// 1-based index matching the x_i labels.
    pub fn index(self) -> usize {
        match self {
            HeraldEvent::X1 => 1,
            HeraldEvent::X2 => 2,
            HeraldEvent::X3 => 3,
            HeraldEvent::X4 => 4,
        }
    }
}

/// Physical parameters of the source stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    /// Mean photon-pair number of the pump pulse.
    pub mu: f64,
    /// Signal-path transmission efficiency.
    pub eta_x: f64,
    /// Heralded-path transmission efficiency.
    pub eta_h: f64,
    /// Detection efficiency of herald detector D1.
    pub eta_1: f64,
    /// Detection efficiency of herald detector D2.
    pub eta_2: f64,
    /// Beam-splitter ratio (fraction routed toward D1).
    pub t: f64,
    /// Dark-count probability per pulse of D1.
    pub d_1: f64,
    /// Dark-count probability per pulse of D2.
    pub d_2: f64,
}

impl Default for SourceParams {
    /// Simulation defaults (mu = 0.1).
    fn default() -> Self {
        SourceParams {
            mu: 0.1,
            eta_x: 0.8,
            eta_h: 0.9,
            eta_1: 0.6,
            eta_2: 0.8,
            t: 0.4,
            d_1: 8e-8,
            d_2: 8e-8,
        }
    }
}

fn check_unit(field: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(Error::InvalidParam {
            field,
            value,
            constraint: "must lie in [0, 1]",
        });
    }
    Ok(())
}

impl SourceParams {
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::InvalidParam {
                field: "mu",
                value: self.mu,
                constraint: "must be finite and non-negative",
            });
        }
        check_unit("eta_x", self.eta_x)?;
        check_unit("eta_h", self.eta_h)?;
        check_unit("eta_1", self.eta_1)?;
        check_unit("eta_2", self.eta_2)?;
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::InvalidParam {
                field: "t",
                value: self.t,
                constraint: "must lie strictly inside (0, 1)",
            });
        }
        if !(0.0..1.0).contains(&self.d_1) {
            return Err(Error::InvalidParam {
                field: "d_1",
                value: self.d_1,
                constraint: "must lie in [0, 1)",
            });
        }
        if !(0.0..1.0).contains(&self.d_2) {
            return Err(Error::InvalidParam {
                field: "d_2",
                value: self.d_2,
                constraint: "must lie in [0, 1)",
            });
        }
        Ok(())
    }
}

/// Per-photon no-click probabilities in the heralded path.
///
/// `f` is the probability that one herald photon triggers neither detector,
/// `f1` that it does not trigger D2, `f2` that it does not trigger D1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossFactors {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Computes the heralded-path loss factors (f, f1, f2).
pub fn loss_factors(p: &SourceParams) -> Result<LossFactors> {
    p.validate()?;
    let f = p.eta_h * (p.t * (1.0 - p.eta_1) + (1.0 - p.t) * (1.0 - p.eta_2)) + 1.0 - p.eta_h;
    let f1 = p.eta_h * (1.0 - (1.0 - p.t) * p.eta_2) + 1.0 - p.eta_h;
    let f2 = p.eta_h * (1.0 - p.t * p.eta_1) + 1.0 - p.eta_h;
    Ok(LossFactors { f, f1, f2 })
}

/// Probability gamma_{x_i}(k) that k herald-path photons produce event `event`.
pub fn gamma(p: &SourceParams, event: HeraldEvent, k: u32) -> Result<f64> {
    let lf = loss_factors(p)?;
    let k = k as i32;
    let g1 = (1.0 - p.d_1) * (1.0 - p.d_2) * lf.f.powi(k);
    let g2 = (1.0 - p.d_2) * lf.f1.powi(k) - g1;
    let g3 = (1.0 - p.d_1) * lf.f2.powi(k) - g1;
    Ok(match event {
        HeraldEvent::X1 => g1,
        HeraldEvent::X2 => g2,
        HeraldEvent::X3 => g3,
        HeraldEvent::X4 => 1.0 - g1 - g2 - g3,
    })
}

/// Truncated photon-number distribution of the signal path for one herald event.
///
/// Weights are stored unnormalized, i.e. as q_{x_i}(n) carrying the event
/// probability; `event_prob` is the closed-form P_{x_i} = sum over all n, and
/// `tail` the analytic mass above the truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDist {
    weights: Vec<f64>,
    event_prob: f64,
    tail: f64,
}

impl PhotonDist {
    /// Unnormalized weight q(n); zero beyond the truncation order.
    pub fn weight(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }

    /// All unnormalized weights up to the truncation order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total event probability P = sum_n q(n), in closed form.
    pub fn event_prob(&self) -> f64 {
        self.event_prob
    }

    /// Mass above the truncation order.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Truncation order.
    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    /// Normalized probability q(n)/P.
    pub fn normalized(&self, n: usize) -> f64 {
        self.weight(n) / self.event_prob
    }
}

/// One Poisson-shaped component: pref * lam^n/n! * decay, summing to `total`.
struct PureTerm {
    pref: f64,
    lam: f64,
    decay: f64,
    total: f64,
}

impl PureTerm {
    fn new(pref: f64, base: f64, mu: f64, eta_x: f64) -> PureTerm {
        // total shares the expression shape of the rate module's g(x) so the
        // two cancel bit-exactly in the eta -> 0 limit
        PureTerm {
            pref,
            lam: mu * eta_x * base,
            decay: (mu * (base * (1.0 - eta_x) - 1.0)).exp(),
            total: pref * (mu * base - mu).exp(),
        }
    }

    fn weights(&self, n_max: usize) -> Vec<f64> {
        let mut w = Vec::with_capacity(n_max + 1);
        let mut cur = self.pref * self.decay;
        w.push(cur);
        for n in 1..=n_max {
            cur *= self.lam / n as f64;
            w.push(cur);
        }
        w
    }

    /// Mass above n_max by forward summation (no cancellation against `total`).
    fn tail(&self, n_max: usize) -> f64 {
        let mut term = self.pref * self.decay;
        for n in 1..=n_max {
            term *= self.lam / n as f64;
        }
        let mut sum = 0.0;
        let mut n = n_max;
        loop {
            n += 1;
            term *= self.lam / n as f64;
            sum += term;
            if term <= sum * 1e-18 + f64::MIN_POSITIVE || n > n_max + 400 {
                break;
            }
        }
        sum
    }
}

/// Signed combination of pure terms describing one herald event.
fn event_terms(p: &SourceParams, event: HeraldEvent) -> Result<Vec<(f64, PureTerm)>> {
    let lf = loss_factors(p)?;
    let c1 = (1.0 - p.d_1) * (1.0 - p.d_2);
    let c2 = 1.0 - p.d_2;
    let c3 = 1.0 - p.d_1;
    let t = |pref: f64, base: f64| PureTerm::new(pref, base, p.mu, p.eta_x);
    Ok(match event {
        HeraldEvent::X1 => vec![(1.0, t(c1, lf.f))],
        HeraldEvent::X2 => vec![(1.0, t(c2, lf.f1)), (-1.0, t(c1, lf.f))],
        HeraldEvent::X3 => vec![(1.0, t(c3, lf.f2)), (-1.0, t(c1, lf.f))],
        HeraldEvent::X4 => vec![
            (1.0, t(1.0, 1.0)),
            (-1.0, t(c2, lf.f1)),
            (-1.0, t(c3, lf.f2)),
            (1.0, t(c1, lf.f)),
        ],
    })
}

fn build_dist(p: &SourceParams, event: HeraldEvent, n_max: usize) -> Result<PhotonDist> {
    let terms = event_terms(p, event)?;
    let mut weights = vec![0.0; n_max + 1];
    let mut event_prob = 0.0;
    let mut tail = 0.0;
    for (sign, term) in &terms {
        for (w, tw) in weights.iter_mut().zip(term.weights(n_max)) {
            *w += sign * tw;
        }
        event_prob += sign * term.total;
        tail += sign * term.tail(n_max);
    }
    for (n, w) in weights.iter_mut().enumerate() {
        if *w < 0.0 {
            if *w < -NEG_CLAMP {
                return Err(Error::NegativeWeight { n, value: *w });
            }
            *w = 0.0;
        }
    }
    if event_prob < 0.0 {
        event_prob = event_prob.max(-NEG_CLAMP);
        if event_prob < 0.0 {
            return Err(Error::NegativeWeight {
                n: usize::MAX,
                value: event_prob,
            });
        }
    }
    tail = tail.max(0.0);
    Ok(PhotonDist {
        weights,
        event_prob,
        tail,
    })
}

/// Closed-form heralded distribution q_{x_i}(n) truncated at `n_max`.
///
/// The truncation order is raised automatically (up to [`N_MAX_CEIL`]) when the
/// analytic tail exceeds [`TAIL_TOL`] of the event probability.
pub fn heralded_dist(p: &SourceParams, event: HeraldEvent, n_max: usize) -> Result<PhotonDist> {
    if n_max < 2 {
        return Err(Error::InvalidParam {
            field: "n_max",
            value: n_max as f64,
            constraint: "truncation order must be at least 2",
        });
    }
    let dist = build_dist(p, event, n_max)?;
    if dist.tail <= TAIL_TOL * dist.event_prob {
        return Ok(dist);
    }
    if n_max < N_MAX_CEIL {
        let dist = build_dist(p, event, N_MAX_CEIL)?;
        if dist.tail <= TAIL_TOL * dist.event_prob {
            return Ok(dist);
        }
    }
    Err(Error::Truncation {
        n_max: n_max.max(N_MAX_CEIL),
        tail: dist.tail,
        tol: TAIL_TOL * dist.event_prob,
    })
}

/// Hand-crafted distribution for tests.
#[cfg(test)]
pub(crate) fn test_dist(weights: Vec<f64>, event_prob: f64) -> PhotonDist {
    PhotonDist {
        weights,
        event_prob,
        tail: 0.0,
    }
}

/// Poisson distribution of a weak coherent pulse; event probability is 1.
pub fn poisson_dist(mu: f64, n_max: usize) -> Result<PhotonDist> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidParam {
            field: "mu",
            value: mu,
            constraint: "must be finite and non-negative",
        });
    }
    if n_max < 2 {
        return Err(Error::InvalidParam {
            field: "n_max",
            value: n_max as f64,
            constraint: "truncation order must be at least 2",
        });
    }
    let build = |n_max: usize| {
        let term = PureTerm {
            pref: 1.0,
            lam: mu,
            decay: (-mu).exp(),
            total: 1.0,
        };
        let weights = term.weights(n_max);
        let tail = term.tail(n_max);
        PhotonDist {
            weights,
            event_prob: 1.0,
            tail,
        }
    };
    let dist = build(n_max);
    if dist.tail <= TAIL_TOL {
        return Ok(dist);
    }
    if n_max < N_MAX_CEIL {
        let dist = build(N_MAX_CEIL);
        if dist.tail <= TAIL_TOL {
            return Ok(dist);
        }
    }
    Err(Error::Truncation {
        n_max: n_max.max(N_MAX_CEIL),
        tail: dist.tail,
        tol: TAIL_TOL,
    })
}
