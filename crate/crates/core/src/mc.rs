//! Event-level Monte Carlo oracle for the closed forms.
//!
//! Each shot draws a Poisson photon-pair number, walks every herald photon
//! through the beam splitter and detectors (plus dark counts), classifies the
//! herald event, and sends the signal photons through source loss and the
//! channel. A click is a surviving signal photon or a background count; the
//! error flag follows the misalignment rate when signal light was detected and
//! the dark-count half otherwise.
//!
//! Shots are split over fixed ChaCha streams so the tallies are identical for
//! any thread schedule and equal to a sequential run of the same seed.

use crate::error::Result;
use crate::link::{overall_efficiency, Leg, LinkParams, E0};
use crate::rates::rate_set;
use crate::source::{heralded_dist, HeraldEvent, SourceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

/// Counter-based generator used for all simulations.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Fixed stream count; tallies are sums over streams, independent of order.
const PARTITIONS: u64 = 64;

/// One Monte Carlo run description.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub shots: u64,
    pub seed: u64,
    pub sp: SourceParams,
    pub lp: LinkParams,
    pub leg: Leg,
}

/// Tallies of one run, indexed by herald event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct McEstimate {
    pub shots: u64,
    pub event_counts: [u64; 4],
    pub click_counts: [u64; 4],
    pub error_counts: [u64; 4],
}

impl McEstimate {
    fn add(mut self, other: McEstimate) -> McEstimate {
        self.shots += other.shots;
        for i in 0..4 {
            self.event_counts[i] += other.event_counts[i];
            self.click_counts[i] += other.click_counts[i];
            self.error_counts[i] += other.error_counts[i];
        }
        self
    }

    /// Empirical event probability.
    pub fn p_hat(&self, event: HeraldEvent) -> f64 {
        self.event_counts[event.index() - 1] as f64 / self.shots as f64
    }

    /// Empirical gain conditioned on the event.
    pub fn q_hat(&self, event: HeraldEvent) -> f64 {
        let i = event.index() - 1;
        self.click_counts[i] as f64 / self.event_counts[i] as f64
    }

    /// Empirical QBER among the event's clicks.
    pub fn e_hat(&self, event: HeraldEvent) -> f64 {
        let i = event.index() - 1;
        self.error_counts[i] as f64 / self.click_counts[i] as f64
    }
}

fn classify(d1: bool, d2: bool) -> usize {
    match (d1, d2) {
        (false, false) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (true, true) => 3,
    }
}

fn run_partition(cfg: &McConfig, stream: u64, shots: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let sp = &cfg.sp;
    let eta = overall_efficiency(&cfg.lp, cfg.leg);
    let y0 = cfg.lp.y0(cfg.leg);
    let e_d = cfg.lp.e_d(cfg.leg);
    let pois = if sp.mu > 0.0 {
        Some(Poisson::new(sp.mu).expect("validated mu"))
    } else {
        None
    };
    let mut est = McEstimate {
        shots,
        ..McEstimate::default()
    };
    for _ in 0..shots {
        let k = pois.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
        let mut d1 = rng.gen::<f64>() < sp.d_1;
        let mut d2 = rng.gen::<f64>() < sp.d_2;
        let mut signal_detected = false;
        for _ in 0..k {
            // herald-path photon: survive, route, fire
            if rng.gen::<f64>() < sp.eta_h {
                if rng.gen::<f64>() < sp.t {
                    d1 = d1 || rng.gen::<f64>() < sp.eta_1;
                } else {
                    d2 = d2 || rng.gen::<f64>() < sp.eta_2;
                }
            }
            // signal-path twin: source loss, then channel plus detector
            if rng.gen::<f64>() < sp.eta_x && rng.gen::<f64>() < eta {
                signal_detected = true;
            }
        }
        let background = rng.gen::<f64>() < y0;
        let idx = classify(d1, d2);
        est.event_counts[idx] += 1;
        if signal_detected || background {
            est.click_counts[idx] += 1;
            let err_prob = if signal_detected { e_d } else { E0 };
            if rng.gen::<f64>() < err_prob {
                est.error_counts[idx] += 1;
            }
        }
    }
    est
}

/// Runs the simulation; deterministic for a fixed seed and config.
pub fn run(cfg: &McConfig) -> Result<McEstimate> {
    cfg.sp.validate()?;
    cfg.lp.validate()?;
    let parts = PARTITIONS.min(cfg.shots.max(1));
    let base = cfg.shots / parts;
    let rem = cfg.shots % parts;
    let est = (0..parts)
        .into_par_iter()
        .map(|p| run_partition(cfg, p, base + u64::from(p < rem)))
        .reduce(McEstimate::default, McEstimate::add);
    Ok(est)
}

/// One line of the model-versus-simulation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub quantity: String,
    pub model: f64,
    pub mc: f64,
    pub sigma: f64,
    pub z: f64,
}

impl ComparisonRow {
    pub fn flagged(&self) -> bool {
        self.z.abs() > 4.0
    }
}

fn row(quantity: String, model: f64, mc: f64, sigma: f64) -> ComparisonRow {
    let z = if sigma > 0.0 {
        (mc - model) / sigma
    } else {
        0.0
    };
    ComparisonRow {
        quantity,
        model,
        mc,
        sigma,
        z,
    }
}

/// Runs the simulation and compares every closed-form P, Q, E against the
/// empirical estimate with binomial standard errors.
pub fn estimate_vs_model(cfg: &McConfig) -> Result<Vec<ComparisonRow>> {
    let est = run(cfg)?;
    let shots = cfg.shots as f64;
    let mut rows = Vec::new();
    for ev in HeraldEvent::ALL {
        let p_model = heralded_dist(&cfg.sp, ev, 20)?.event_prob();
        let sigma = (p_model * (1.0 - p_model) / shots).sqrt();
        rows.push(row(
            format!("p_x{}", ev.index()),
            p_model,
            est.p_hat(ev),
            sigma,
        ));
    }
    for ev in HeraldEvent::ALL {
        let i = ev.index() - 1;
        if est.event_counts[i] == 0 {
            continue;
        }
        let rs = rate_set(ev, cfg.leg, &cfg.sp, &cfg.lp, 20)?;
        let n_ev = est.event_counts[i] as f64;
        let sigma_q = (rs.q * (1.0 - rs.q) / n_ev).sqrt();
        rows.push(row(
            format!("q_x{}", ev.index()),
            rs.q,
            est.q_hat(ev),
            sigma_q,
        ));
        if est.click_counts[i] > 0 {
            let n_click = est.click_counts[i] as f64;
            let sigma_e = (rs.e * (1.0 - rs.e) / n_click).sqrt();
            rows.push(row(
                format!("e_x{}", ev.index()),
                rs.e,
                est.e_hat(ev),
                sigma_e,
            ));
        }
    }
    Ok(rows)
}

/// Herald-event frequencies for a fixed photon-pair number `k`; oracle for the
/// per-event probabilities gamma(k).
pub fn herald_event_frequencies(
    sp: &SourceParams,
    k: u32,
    trials: u64,
    seed: u64,
) -> Result<[f64; 4]> {
    sp.validate()?;
    let parts = PARTITIONS.min(trials.max(1));
    let base = trials / parts;
    let rem = trials % parts;
    let counts = (0..parts)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p);
            let mut counts = [0u64; 4];
            for _ in 0..base + u64::from(p < rem) {
                let mut d1 = rng.gen::<f64>() < sp.d_1;
                let mut d2 = rng.gen::<f64>() < sp.d_2;
                for _ in 0..k {
                    if rng.gen::<f64>() < sp.eta_h {
                        if rng.gen::<f64>() < sp.t {
                            d1 = d1 || rng.gen::<f64>() < sp.eta_1;
                        } else {
                            d2 = d2 || rng.gen::<f64>() < sp.eta_2;
                        }
                    }
                }
                counts[classify(d1, d2)] += 1;
            }
            counts
        })
        .reduce(
            || [0u64; 4],
            |mut a, b| {
                for i in 0..4 {
                    a[i] += b[i];
                }
                a
            },
        );
    Ok(counts.map(|c| c as f64 / trials as f64))
}

/// Click frequency for exactly `n` photons entering the channel; oracle for
/// the yield formula.
pub fn yield_frequency(lp: &LinkParams, leg: Leg, n: u32, trials: u64, seed: u64) -> Result<f64> {
    lp.validate()?;
    let eta = overall_efficiency(lp, leg);
    let y0 = lp.y0(leg);
    let parts = PARTITIONS.min(trials.max(1));
    let base = trials / parts;
    let rem = trials % parts;
    let clicks: u64 = (0..parts)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p);
            let mut clicks = 0u64;
            for _ in 0..base + u64::from(p < rem) {
                let mut detected = false;
                for _ in 0..n {
                    detected = detected || rng.gen::<f64>() < eta;
                }
                if detected || rng.gen::<f64>() < y0 {
                    clicks += 1;
                }
            }
            clicks
        })
        .sum();
    Ok(clicks as f64 / trials as f64)
}
