//! Passive decoy-state estimation of single- and two-photon yields and errors.
//!
//! The three usable herald classes give three linear relations between the
//! observed gains/QBERs and the unknown yields Y_n and error products e_n Y_n.
//! Pairwise elimination bounds Y_1 from below; the two-photon variants need the
//! dropped tails bounded rather than discarded because the eliminated
//! coefficient flips sign (see `y2_lower`). The same machinery accepts three
//! Poisson intensity classes for the weak-coherent-pulse baseline.

use crate::error::{Error, Result};
use crate::link::{error_yield_n, overall_efficiency, yield_n, Leg, LinkParams, E0};
use crate::rates::rate_set;
use crate::source::{heralded_dist, poisson_dist, HeraldEvent, PhotonDist, SourceParams};

/// Observables of one source class entering the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassData {
    /// Photon-number distribution of the class (unnormalized weights).
    pub dist: PhotonDist,
    /// Total class probability P.
    pub prob: f64,
    /// Observed overall gain Q on the first leg.
    pub gain: f64,
    /// Observed overall QBER E on the first leg.
    pub qber: f64,
}

impl ClassData {
    fn w(&self, n: usize) -> f64 {
        self.dist.weight(n)
    }

    /// Mass above order `k`: explicit upper weights plus the analytic tail.
    fn mass_above(&self, k: usize) -> f64 {
        let upper: f64 = (k + 1..=self.dist.n_max())
            .map(|n| self.dist.weight(n))
            .sum();
        upper + self.dist.tail()
    }

    fn pqe(&self) -> f64 {
        self.prob * self.gain * self.qber
    }
}

/// Estimator inputs: three classes ordered so the ratio chain runs upward,
/// plus the calibrated background and misalignment rates of the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyInputs {
    /// Classes in chain order; index 0, 1, 2 carry labels 2, 3, 4.
    pub classes: [ClassData; 3],
    /// Background detection rate at the receiving side (known device property).
    pub y0_a: f64,
    /// Misalignment error rate at the receiving side (known device property).
    pub e_d_a: f64,
}

/// First failing ratio comparison of the monotonicity precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonotonicityViolation {
    /// Upper class label (2..=4).
    pub i: u8,
    /// Lower class label (2..=4).
    pub j: u8,
    /// Photon number where the ratio chain first drops.
    pub n: usize,
}

/// Yield lower bounds and error-rate upper bounds delivered by the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    pub y1_l: f64,
    pub y2_l: f64,
    pub e1_u: f64,
    pub e2_u: f64,
    /// Class pair (labels) that achieved the Y1 maximum.
    pub pair_y1: Option<(u8, u8)>,
    /// Class pair (labels) that achieved the Y2 maximum.
    pub pair_y2: Option<(u8, u8)>,
    /// True when the bounds are the ideal (infinite-decoy) model values.
    pub ideal: bool,
}

/// Ordered pairs (i, j) with i above j in the chain, as indices into `classes`.
const PAIRS: [(usize, usize); 3] = [(1, 0), (2, 0), (2, 1)];

fn label(idx: usize) -> u8 {
    idx as u8 + 2
}

impl DecoyInputs {
    /// Model-generated observables of the three heralded classes (first leg).
    pub fn from_model(sp: &SourceParams, lp: &LinkParams, n_max: usize) -> Result<Self> {
        let n_max = n_max.max(3);
        let mut classes = Vec::with_capacity(3);
        for ev in [HeraldEvent::X2, HeraldEvent::X3, HeraldEvent::X4] {
            let rs = rate_set(ev, Leg::Ba, sp, lp, n_max)?;
            let dist = heralded_dist(sp, ev, n_max)?;
            classes.push(ClassData {
                prob: dist.event_prob(),
                dist,
                gain: rs.q,
                qber: rs.e,
            });
        }
        Ok(DecoyInputs {
            classes: classes.try_into().unwrap(),
            y0_a: lp.y0_a,
            e_d_a: lp.e_d_a,
        })
    }

    /// Vacuum + weak + signal Poisson classes for the baseline protocol.
    pub fn from_poisson_classes(mu: f64, lp: &LinkParams, n_max: usize) -> Result<Self> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidParam {
                field: "mu",
                value: mu,
                constraint: "must be positive for the baseline source",
            });
        }
        lp.validate()?;
        let n_max = n_max.max(3);
        let eta = overall_efficiency(lp, Leg::Ba);
        let class = |intensity: f64| -> Result<ClassData> {
            let dist = poisson_dist(intensity, n_max)?;
            let q = 1.0 - (1.0 - lp.y0_a) * (-intensity * eta).exp();
            let e = if q > 0.0 {
                (E0 * lp.y0_a + lp.e_d_a * (1.0 - (-intensity * eta).exp())) / q
            } else {
                E0
            };
            Ok(ClassData {
                prob: dist.event_prob(),
                dist,
                gain: q,
                qber: e,
            })
        };
        Ok(DecoyInputs {
            classes: [class(0.0)?, class(mu / 2.0)?, class(mu)?],
            y0_a: lp.y0_a,
            e_d_a: lp.e_d_a,
        })
    }
}

/// Verifies the ratio chain q_i(n)/q_j(n) is non-decreasing in n for every
/// ordered pair, up to `n_max`. A zero denominator with a positive numerator
/// counts as satisfied; a 0/0 entry is skipped.
pub fn check_monotonicity(
    d: &DecoyInputs,
    n_max: usize,
) -> std::result::Result<(), MonotonicityViolation> {
    for (i, j) in PAIRS {
        let mut prev: Option<f64> = None;
        for n in 1..=n_max {
            let (a, b) = (d.classes[i].w(n), d.classes[j].w(n));
            if b == 0.0 {
                continue;
            }
            let r = a / b;
            if let Some(p) = prev {
                if r < p * (1.0 - 1e-9) {
                    return Err(MonotonicityViolation {
                        i: label(i),
                        j: label(j),
                        n,
                    });
                }
            }
            prev = Some(r);
        }
    }
    Ok(())
}

/// Lower bound on the single-photon yield Y_1: pairwise elimination of Y_2
/// with the non-positive high-order terms dropped, maximized over pairs.
pub fn y1_lower(d: &DecoyInputs) -> Result<(f64, (u8, u8))> {
    let mut best: Option<(f64, (u8, u8))> = None;
    for (i, j) in PAIRS {
        let (ci, cj) = (&d.classes[i], &d.classes[j]);
        let den = ci.w(2) * cj.w(1) - cj.w(2) * ci.w(1);
        if den <= 0.0 {
            continue;
        }
        let num = ci.w(2) * cj.prob * cj.gain
            - cj.w(2) * ci.prob * ci.gain
            - (ci.w(2) * cj.w(0) - cj.w(2) * ci.w(0)) * d.y0_a;
        let v = num / den;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, (label(i), label(j))));
        }
    }
    let (v, pair) = best.ok_or(Error::DegenerateSource)?;
    Ok((v.clamp(0.0, 1.0), pair))
}

/// Lower bound on the two-photon yield Y_2.
///
/// Here the eliminated coefficient q_i(1) q_j(2) - q_j(1) q_i(2) is negative
/// under the ratio chain while the dropped n >= 3 coefficients share its sign,
/// so discarding them would push the estimate above the true yield. Instead
/// the dropped sum is bounded with Y_n <= 1, which keeps the result one-sided.
pub fn y2_lower(d: &DecoyInputs) -> Result<(f64, (u8, u8))> {
    let mut best: Option<(f64, (u8, u8))> = None;
    for (i, j) in PAIRS {
        let (ci, cj) = (&d.classes[i], &d.classes[j]);
        let den = ci.w(1) * cj.w(2) - cj.w(1) * ci.w(2);
        if den >= 0.0 {
            continue;
        }
        let num = ci.w(1) * cj.prob * cj.gain
            - cj.w(1) * ci.prob * ci.gain
            - (ci.w(1) * cj.w(0) - cj.w(1) * ci.w(0)) * d.y0_a;
        // sum_{n>=3} [q_i(1) q_j(n) - q_j(1) q_i(n)] Y_n, bounded with Y_n <= 1
        let ctot = (ci.w(1) * cj.mass_above(2) - cj.w(1) * ci.mass_above(2)).min(0.0);
        let v = (num - ctot) / den;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, (label(i), label(j))));
        }
    }
    let (v, pair) = best.ok_or(Error::DegenerateSource)?;
    Ok((v.clamp(0.0, 1.0), pair))
}

/// Cofactors that cancel the n = 2 and n = 3 terms of the three relations.
fn cofactors(d: &DecoyInputs, a: usize, b: usize) -> [f64; 3] {
    let q = |idx: usize, n: usize| d.classes[idx].w(n);
    [
        q(2, a) * q(1, b) - q(1, a) * q(2, b),
        q(0, a) * q(2, b) - q(2, a) * q(0, b),
        q(1, a) * q(0, b) - q(0, a) * q(1, b),
    ]
}

/// Upper bound on the single-photon error rate e_1 from the three-class
/// combination, with the positive n >= 4 tail dropped and Y_1 replaced by its
/// lower bound.
pub fn e1_upper(d: &DecoyInputs, y1_l: f64) -> Result<f64> {
    if y1_l <= 0.0 {
        return Err(Error::EstimationFailure {
            reason: "single-photon yield bound is zero",
        });
    }
    let c = cofactors(d, 3, 2);
    let den: f64 = (0..3).map(|k| c[k] * d.classes[k].w(1)).sum();
    if den <= 0.0 {
        return Err(Error::EstimationFailure {
            reason: "one-photon error denominator is not positive",
        });
    }
    let c0: f64 = (0..3).map(|k| c[k] * d.classes[k].w(0)).sum();
    let num: f64 = (0..3).map(|k| c[k] * d.classes[k].pqe()).sum::<f64>() - c0 * E0 * d.y0_a;
    let bound = num / (den * y1_l);
    if bound < -1e-9 {
        return Err(Error::EstimationFailure {
            reason: "one-photon error bound is negative",
        });
    }
    Ok(bound.max(0.0))
}

/// Upper bound on the two-photon error rate e_2.
///
/// The denominator of the three-class combination is negative, so the dropped
/// n >= 4 tail is bounded with e_n Y_n <= e_0 Y_0 + e_d rather than discarded.
pub fn e2_upper(d: &DecoyInputs, y2_l: f64) -> Result<f64> {
    if y2_l <= 0.0 {
        return Err(Error::EstimationFailure {
            reason: "two-photon yield bound is zero",
        });
    }
    let c = cofactors(d, 3, 1);
    let den: f64 = (0..3).map(|k| c[k] * d.classes[k].w(2)).sum();
    if den >= 0.0 {
        return Err(Error::EstimationFailure {
            reason: "two-photon error denominator is not negative",
        });
    }
    let c0: f64 = (0..3).map(|k| c[k] * d.classes[k].w(0)).sum();
    let mut num: f64 = (0..3).map(|k| c[k] * d.classes[k].pqe()).sum::<f64>() - c0 * E0 * d.y0_a;
    let tail_coeff: f64 = (0..3)
        .map(|k| c[k] * d.classes[k].mass_above(3))
        .sum::<f64>()
        .max(0.0);
    num -= tail_coeff * (E0 * d.y0_a + d.e_d_a);
    let bound = num / (den * y2_l);
    if bound < -1e-9 {
        return Err(Error::EstimationFailure {
            reason: "two-photon error bound is negative",
        });
    }
    Ok(bound.max(0.0))
}

/// Single-class upper bound on e_1: drop every n >= 2 term of E Q P.
fn e1_upper_single(d: &DecoyInputs, y1_l: f64) -> Result<f64> {
    if y1_l <= 0.0 {
        return Err(Error::EstimationFailure {
            reason: "single-photon yield bound is zero",
        });
    }
    let mut best: Option<f64> = None;
    for cls in &d.classes {
        if cls.w(1) <= 0.0 {
            continue;
        }
        let v = (cls.pqe() - cls.w(0) * E0 * d.y0_a) / (cls.w(1) * y1_l);
        if best.is_none_or(|b| v < b) {
            best = Some(v);
        }
    }
    let v = best.ok_or(Error::EstimationFailure {
        reason: "no class carries single-photon weight",
    })?;
    if v < -1e-9 {
        return Err(Error::EstimationFailure {
            reason: "one-photon error bound is negative",
        });
    }
    Ok(v.max(0.0))
}

/// Single-class upper bound on e_2: drop every n != 0, 2 term of E Q P.
fn e2_upper_single(d: &DecoyInputs, y2_l: f64) -> Result<f64> {
    if y2_l <= 0.0 {
        return Err(Error::EstimationFailure {
            reason: "two-photon yield bound is zero",
        });
    }
    let mut best: Option<f64> = None;
    for cls in &d.classes {
        if cls.w(2) <= 0.0 {
            continue;
        }
        let v = (cls.pqe() - cls.w(0) * E0 * d.y0_a) / (cls.w(2) * y2_l);
        if best.is_none_or(|b| v < b) {
            best = Some(v);
        }
    }
    let v = best.ok_or(Error::EstimationFailure {
        reason: "no class carries two-photon weight",
    })?;
    if v < -1e-9 {
        return Err(Error::EstimationFailure {
            reason: "two-photon error bound is negative",
        });
    }
    Ok(v.max(0.0))
}

/// Finite-decoy bounds for the heralded protocol (three-class error formulas).
pub fn estimate_bounds(d: &DecoyInputs) -> Result<DecoyBounds> {
    if check_monotonicity(d, d.classes[0].dist.n_max()).is_err() {
        return Err(Error::EstimationFailure {
            reason: "monotonicity precondition violated",
        });
    }
    let (y1_l, pair_y1) = y1_lower(d)?;
    let (y2_l, pair_y2) = y2_lower(d)?;
    let e1_u = e1_upper(d, y1_l)?;
    let e2_u = e2_upper(d, y2_l)?;
    Ok(DecoyBounds {
        y1_l,
        y2_l,
        e1_u,
        e2_u,
        pair_y1: Some(pair_y1),
        pair_y2: Some(pair_y2),
        ideal: false,
    })
}

/// Finite-decoy bounds for the vacuum + weak + signal baseline.
pub fn estimate_bounds_vacuum_weak(d: &DecoyInputs) -> Result<DecoyBounds> {
    if check_monotonicity(d, d.classes[0].dist.n_max()).is_err() {
        return Err(Error::EstimationFailure {
            reason: "monotonicity precondition violated",
        });
    }
    let (y1_l, pair_y1) = y1_lower(d)?;
    let (y2_l, pair_y2) = y2_lower(d)?;
    let e1_u = e1_upper_single(d, y1_l)?;
    let e2_u = e2_upper_single(d, y2_l)?;
    Ok(DecoyBounds {
        y1_l,
        y2_l,
        e1_u,
        e2_u,
        pair_y1: Some(pair_y1),
        pair_y2: Some(pair_y2),
        ideal: false,
    })
}

/// Infinite-decoy (ideal) bounds: the true model yields and error rates on the
/// first leg.
pub fn ideal_bounds(lp: &LinkParams) -> Result<DecoyBounds> {
    lp.validate()?;
    let e_of = |n: u32| {
        let y = yield_n(lp, Leg::Ba, n);
        if y > 0.0 {
            error_yield_n(lp, Leg::Ba, n) / y
        } else {
            E0
        }
    };
    Ok(DecoyBounds {
        y1_l: yield_n(lp, Leg::Ba, 1),
        y2_l: yield_n(lp, Leg::Ba, 2),
        e1_u: e_of(1),
        e2_u: e_of(2),
        pair_y1: None,
        pair_y2: None,
        ideal: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn table1(mu: f64) -> SourceParams {
        SourceParams::default().with_mu(mu)
    }

    fn truth(lp: &LinkParams) -> (f64, f64, f64, f64) {
        let b = ideal_bounds(lp).unwrap();
        (b.y1_l, b.y2_l, b.e1_u, b.e2_u)
    }

    #[test]
    fn monotonicity_holds_on_default_params() {
        let d = DecoyInputs::from_model(&table1(0.1), &LinkParams::default(), 20).unwrap();
        assert!(check_monotonicity(&d, 20).is_ok());
    }

    #[test]
    fn monotonicity_holds_for_poisson_classes() {
        let d = DecoyInputs::from_poisson_classes(0.1, &LinkParams::default(), 20).unwrap();
        assert!(check_monotonicity(&d, 20).is_ok());
    }

    #[test]
    fn identical_classes_pass_the_chain_but_degenerate_the_pairs() {
        let d0 = DecoyInputs::from_model(&table1(0.1), &LinkParams::default(), 20).unwrap();
        let c = d0.classes[0].clone();
        let d = DecoyInputs {
            classes: [c.clone(), c.clone(), c],
            y0_a: d0.y0_a,
            e_d_a: d0.e_d_a,
        };
        assert!(check_monotonicity(&d, 20).is_ok());
        assert!(matches!(y1_lower(&d), Err(Error::DegenerateSource)));
    }

    #[test]
    fn crafted_ratio_drop_is_located() {
        // Ratios against classes 2 and 3 stay monotone, but q4(3)/q3(3) drops
        // below q4(2)/q3(2).
        let class = |w: Vec<f64>| ClassData {
            prob: w.iter().sum(),
            dist: crate::source::test_dist(w, 1.0),
            gain: 0.5,
            qber: 0.1,
        };
        let d = DecoyInputs {
            classes: [
                class(vec![1.0, 1.0, 1.0, 1.0]),
                class(vec![1.0, 2.0, 4.0, 8.0]),
                class(vec![1.0, 4.0, 16.0, 30.0]),
            ],
            y0_a: 1e-7,
            e_d_a: 0.01,
        };
        let v = check_monotonicity(&d, 3).unwrap_err();
        assert_eq!((v.i, v.j, v.n), (4, 3, 3));
    }

    #[test]
    fn forward_generated_bounds_are_one_sided_on_default_sweep() {
        let sp = table1(0.1);
        for alpha_ba in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let lp = LinkParams::default().with_alpha_ba_db(alpha_ba);
            let d = DecoyInputs::from_model(&sp, &lp, 20).unwrap();
            let b = estimate_bounds(&d).unwrap();
            let (y1, y2, e1, e2) = truth(&lp);
            assert!(b.y1_l <= y1 * (1.0 + 1e-9), "alpha {alpha_ba}");
            assert!(b.y2_l <= y2 * (1.0 + 1e-9), "alpha {alpha_ba}");
            assert!(b.e1_u >= e1 * (1.0 - 1e-9), "alpha {alpha_ba}");
            assert!(b.e2_u >= e2 * (1.0 - 1e-9), "alpha {alpha_ba}");
            assert!(b.y2_l > 0.0);
        }
    }

    #[test]
    fn bounds_are_tight_at_the_reference_point() {
        let lp = LinkParams::default().with_alpha_ba_db(2.0);
        let d = DecoyInputs::from_model(&table1(0.1), &lp, 20).unwrap();
        let b = estimate_bounds(&d).unwrap();
        let (y1, _, e1, _) = truth(&lp);
        assert!((b.y1_l - y1).abs() / y1 < 0.05, "Y1 {} vs {}", b.y1_l, y1);
        assert!((b.e1_u - e1).abs() / e1 < 0.10, "e1 {} vs {}", b.e1_u, e1);
        assert!(b.e2_u > 0.0 && b.e2_u <= 0.5);
    }

    #[test]
    fn dead_channel_bounds_are_clamped() {
        let lp = LinkParams {
            eta_opt_ba: 0.0,
            ..LinkParams::default()
        };
        let d = DecoyInputs::from_model(&table1(0.1), &lp, 20).unwrap();
        let (y1_l, _) = y1_lower(&d).unwrap();
        let (y2_l, _) = y2_lower(&d).unwrap();
        assert!(y1_l >= 0.0 && y1_l <= lp.y0_a * (1.0 + 1e-6) + 1e-15);
        assert!(y2_l >= 0.0 && y2_l <= lp.y0_a * (1.0 + 1e-6) + 1e-15);
    }

    #[test]
    fn error_free_channel_gives_zero_error_bounds() {
        let sp = SourceParams {
            d_1: 0.0,
            d_2: 0.0,
            ..table1(0.1)
        };
        let lp = LinkParams {
            alpha_ba_db: 0.0,
            y0_a: 0.0,
            y0_b: 0.0,
            e_d_a: 0.0,
            e_d_b: 0.0,
            ..LinkParams::default()
        };
        let d = DecoyInputs::from_model(&sp, &lp, 20).unwrap();
        let b = estimate_bounds(&d).unwrap();
        assert!(b.e1_u.abs() < 1e-12);
        assert!(b.e2_u.abs() < 1e-12);
    }

    #[test]
    fn ideal_bounds_equal_link_truths() {
        let lp = LinkParams::default().with_alpha_ba_db(2.0);
        let b = ideal_bounds(&lp).unwrap();
        assert!((b.y1_l - yield_n(&lp, Leg::Ba, 1)).abs() < 1e-14);
        assert!((b.y2_l - yield_n(&lp, Leg::Ba, 2)).abs() < 1e-14);
        assert!((b.e1_u - error_yield_n(&lp, Leg::Ba, 1) / yield_n(&lp, Leg::Ba, 1)).abs() < 1e-14);
        assert!(b.ideal);

        let ideal_perfect = ideal_bounds(&LinkParams {
            alpha_ba_db: 0.0,
            eta_opt_ba: 1.0,
            eta_d_a: 1.0,
            y0_a: 0.0,
            ..LinkParams::default()
        })
        .unwrap();
        assert_eq!(ideal_perfect.y1_l, 1.0);
        assert_eq!(ideal_perfect.e1_u, 0.0131);
    }

    #[test]
    fn finite_bounds_bracket_ideal_bounds() {
        let sp = table1(0.1);
        for alpha_ba in [0.0, 1.0, 2.0, 3.0] {
            let lp = LinkParams::default().with_alpha_ba_db(alpha_ba);
            let fin = estimate_bounds(&DecoyInputs::from_model(&sp, &lp, 20).unwrap()).unwrap();
            let idl = ideal_bounds(&lp).unwrap();
            assert!(fin.y1_l <= idl.y1_l + 1e-15);
            assert!(fin.e1_u >= idl.e1_u - 1e-15);
        }
    }

    #[test]
    fn pair_max_is_order_independent() {
        let d = DecoyInputs::from_model(&table1(0.1), &LinkParams::default(), 20).unwrap();
        let (v, pair) = y1_lower(&d).unwrap();
        // Recompute each pair by hand and confirm the reported max dominates.
        let mut values = Vec::new();
        for (i, j) in PAIRS {
            let (ci, cj) = (&d.classes[i], &d.classes[j]);
            let den = ci.w(2) * cj.w(1) - cj.w(2) * ci.w(1);
            if den <= 0.0 {
                continue;
            }
            let num = ci.w(2) * cj.prob * cj.gain
                - cj.w(2) * ci.prob * ci.gain
                - (ci.w(2) * cj.w(0) - cj.w(2) * ci.w(0)) * d.y0_a;
            values.push(((label(i), label(j)), num / den));
        }
        let best = values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, |a, (_, v)| a.max(v));
        assert!((v - best.clamp(0.0, 1.0)).abs() < 1e-15);
        assert!(values.iter().any(|&(p, val)| p == pair && val == best));
    }

    #[test]
    fn vacuum_weak_estimator_is_one_sided() {
        for mu in [0.05, 0.1, 0.3] {
            for alpha_ba in [0.0, 1.0, 2.0] {
                let lp = LinkParams::default().with_alpha_ba_db(alpha_ba);
                let d = DecoyInputs::from_poisson_classes(mu, &lp, 20).unwrap();
                let b = estimate_bounds_vacuum_weak(&d).unwrap();
                let (y1, y2, e1, e2) = truth(&lp);
                assert!(b.y1_l <= y1 * (1.0 + 1e-9));
                assert!(b.y2_l <= y2 * (1.0 + 1e-9));
                assert!(b.e1_u >= e1 * (1.0 - 1e-9));
                assert!(b.e2_u >= e2 * (1.0 - 1e-9));
            }
        }
    }

    fn noisy_hold_count(sigma: f64, trials: usize) -> (usize, usize) {
        let lp = LinkParams::default().with_alpha_ba_db(2.0);
        let clean = DecoyInputs::from_model(&table1(0.1), &lp, 20).unwrap();
        let (y1, y2, e1, e2) = truth(&lp);
        let mut rng = StdRng::seed_from_u64(99);
        let noise = Normal::new(1.0, sigma).unwrap();
        let (mut held, mut safe_failures) = (0, 0);
        for _ in 0..trials {
            let mut d = clean.clone();
            for c in &mut d.classes {
                c.gain *= noise.sample(&mut rng);
                c.qber *= noise.sample(&mut rng);
            }
            match estimate_bounds(&d) {
                Ok(b) => {
                    assert!((0.0..=1.0).contains(&b.y1_l));
                    assert!((0.0..=1.0).contains(&b.y2_l));
                    assert!(b.e1_u >= 0.0 && b.e2_u >= 0.0);
                    if b.y1_l <= y1 && b.y2_l <= y2 && b.e1_u >= e1 && b.e2_u >= e2 {
                        held += 1;
                    }
                }
                // declining to produce bounds aborts the round; never unsafe
                Err(Error::EstimationFailure { .. }) | Err(Error::DegenerateSource) => {
                    safe_failures += 1;
                }
                Err(e) => panic!("unexpected error under noise: {e:?}"),
            }
        }
        (held, safe_failures)
    }

    #[test]
    fn small_noise_keeps_bounds_one_sided() {
        // Below the estimator's noise-amplification scale the one-sided
        // direction survives essentially always.
        let (held, _) = noisy_hold_count(1e-5, 1000);
        assert!(held > 990, "held in {held}/1000 trials");
    }

    #[test]
    fn percent_noise_degrades_gracefully() {
        // The pair formulas amplify observable noise by two orders of
        // magnitude, so percent-level noise swamps the one-sided margins; the
        // estimator must still stay in-domain and fail only by declining.
        let (held, safe_failures) = noisy_hold_count(0.01, 1000);
        assert!(held < 500, "margins should be swamped, held {held}/1000");
        assert!(safe_failures < 1000);
    }

    #[test]
    fn random_forward_models_stay_one_sided() {
        let mut rng = StdRng::seed_from_u64(12);
        let mut accepted = 0;
        while accepted < 60 {
            let sp = SourceParams {
                mu: rng.gen_range(0.01..0.5),
                eta_x: rng.gen_range(0.3..1.0),
                eta_h: rng.gen_range(0.5..1.0),
                eta_1: rng.gen_range(0.3..0.95),
                eta_2: rng.gen_range(0.3..0.95),
                t: rng.gen_range(0.2..0.8),
                d_1: 10f64.powf(rng.gen_range(-9.0..-5.0)),
                d_2: 10f64.powf(rng.gen_range(-9.0..-5.0)),
            };
            let lp = LinkParams {
                alpha_ba_db: rng.gen_range(0.0..4.0),
                eta_opt_ba: rng.gen_range(0.1..0.9),
                eta_opt_bab: rng.gen_range(0.05..0.9),
                eta_d_a: rng.gen_range(0.3..0.95),
                eta_d_b: rng.gen_range(0.3..0.95),
                y0_a: 10f64.powf(rng.gen_range(-9.0..-5.0)),
                y0_b: 10f64.powf(rng.gen_range(-9.0..-5.0)),
                e_d_a: rng.gen_range(0.001..0.05),
                e_d_b: rng.gen_range(0.001..0.05),
            };
            let d = DecoyInputs::from_model(&sp, &lp, 20).unwrap();
            if check_monotonicity(&d, 20).is_err() {
                continue;
            }
            accepted += 1;
            let (y1, y2, e1, e2) = truth(&lp);
            let (y1_l, _) = y1_lower(&d).unwrap();
            let (y2_l, _) = y2_lower(&d).unwrap();
            assert!(y1_l <= y1 * (1.0 + 1e-9));
            assert!(y2_l <= y2 * (1.0 + 1e-9));
            // a vanishing yield bound aborts estimation (conservative), so the
            // error bounds are only checked when they exist
            match estimate_bounds(&d) {
                Ok(b) => {
                    assert!(b.e1_u >= e1 * (1.0 - 1e-9));
                    assert!(b.e2_u >= e2 * (1.0 - 1e-9));
                }
                Err(Error::EstimationFailure { .. }) => {}
                Err(e) => panic!("unexpected error: {e:?}"),
            }
        }
    }
}
