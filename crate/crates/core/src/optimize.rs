//! Intensity optimization and maximal-distance root finding.

use crate::capacity::{protocol_capacity, Mode, Protocol};
use crate::error::{Error, Result};
use crate::link::LinkParams;
use crate::source::SourceParams;

/// Result of the intensity search at fixed attenuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    pub mu_star: f64,
    pub cs_star: f64,
    pub evaluations: usize,
    /// Final golden-section bracket.
    pub bracket: (f64, f64),
}

/// Result of the maximal-distance bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    /// Largest round-trip attenuation with capacity above the floor.
    pub alpha_star_db: f64,
    /// One-way distance at 0.2 dB/km of fiber traversed twice.
    pub distance_km: f64,
    pub iterations: usize,
}

/// Grid points of the pre-scan that picks the golden-section bracket.
const SCAN_POINTS: usize = 25;
/// Relative tolerance on the optimal intensity.
const MU_REL_TOL: f64 = 1e-3;
/// Bisection resolution in dB.
const ALPHA_TOL_DB: f64 = 0.01;
/// Default capacity floor distinguishing "alive" from clamped-to-zero.
pub const CAPACITY_FLOOR: f64 = 1e-12;

#[allow(clippy::too_many_arguments)]
fn cs_at(
    protocol: Protocol,
    sp: &SourceParams,
    lp: &LinkParams,
    alpha_bab_db: f64,
    mu: f64,
    mode: Mode,
    ratio: f64,
    n_max: usize,
) -> Result<f64> {
    let sp = sp.with_mu(mu);
    let lp = lp.with_alpha_ba_db(alpha_bab_db / 2.0);
    Ok(protocol_capacity(protocol, &sp, &lp, mode, ratio, n_max)?.cs)
}

/// Maximizes capacity over the source intensity on a log-spaced domain.
///
/// A 25-point log-grid scan selects the bracket (guarding against plateaus or
/// boundary optima), then golden-section search on log mu refines it to a
/// relative tolerance of 1e-3.
#[allow(clippy::too_many_arguments)]
pub fn optimal_mu(
    alpha_bab_db: f64,
    protocol: Protocol,
    sp: &SourceParams,
    lp: &LinkParams,
    bounds: (f64, f64),
    mode: Mode,
    ratio: f64,
    n_max: usize,
) -> Result<OptResult> {
    let (mu_min, mu_max) = bounds;
    if !(mu_min > 0.0 && mu_max > mu_min && mu_max <= 1.0) {
        return Err(Error::InvalidParam {
            field: "mu_bounds",
            value: mu_min,
            constraint: "need 0 < mu_min < mu_max <= 1",
        });
    }
    let mut evals = 0;
    let mut eval = |mu: f64| -> Result<f64> {
        evals += 1;
        cs_at(protocol, sp, lp, alpha_bab_db, mu, mode, ratio, n_max)
    };

    let (lo_log, hi_log) = (mu_min.ln(), mu_max.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| (lo_log + (hi_log - lo_log) * i as f64 / (SCAN_POINTS - 1) as f64).exp())
        .collect();
    let mut best_idx = 0;
    let mut best_cs = f64::NEG_INFINITY;
    let mut any_positive = false;
    let mut values = Vec::with_capacity(SCAN_POINTS);
    for (i, &mu) in grid.iter().enumerate() {
        let cs = eval(mu)?;
        any_positive |= cs > 0.0;
        if cs > best_cs {
            best_cs = cs;
            best_idx = i;
        }
        values.push(cs);
    }
    if !any_positive {
        return Err(Error::NoPositiveCapacity);
    }

    // Bracket around the grid argmax; golden section on log mu.
    let mut a = grid[best_idx.saturating_sub(1)].ln();
    let mut b = grid[(best_idx + 1).min(SCAN_POINTS - 1)].ln();
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let tol = (1.0 + MU_REL_TOL).ln();
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1.exp())?;
    let mut f2 = eval(x2.exp())?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2.exp())?;
        }
    }
    let (mu_star, cs_star) = if f1 >= f2 {
        (x1.exp(), f1)
    } else {
        (x2.exp(), f2)
    };
    // The scan winner stands if refinement landed on a flat stretch below it.
    let (mu_star, cs_star) = if best_cs > cs_star {
        (grid[best_idx], best_cs)
    } else {
        (mu_star, cs_star)
    };
    Ok(OptResult {
        mu_star,
        cs_star,
        evaluations: evals,
        bracket: (a.exp(), b.exp()),
    })
}

/// Finds the largest round-trip attenuation with capacity above `floor` by
/// bisection to 0.01 dB.
#[allow(clippy::too_many_arguments)]
pub fn max_distance(
    mu: f64,
    protocol: Protocol,
    sp: &SourceParams,
    lp: &LinkParams,
    floor: f64,
    mode: Mode,
    ratio: f64,
    n_max: usize,
) -> Result<RootResult> {
    let eval = |alpha: f64| cs_at(protocol, sp, lp, alpha, mu, mode, ratio, n_max);
    if eval(0.0)? <= floor {
        return Err(Error::ProtocolDead);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while eval(hi)? > floor {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if hi > 512.0 {
            return Err(Error::NoPositiveCapacity);
        }
    }
    while hi - lo > ALPHA_TOL_DB {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > floor {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let alpha_star_db = 0.5 * (lo + hi);
    Ok(RootResult {
        alpha_star_db,
        distance_km: alpha_star_db / 0.4,
        iterations,
    })
}
