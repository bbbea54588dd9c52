//! Collision-severity model: relation between injected position error and the
//! relative speed at first contact, and its inversion into perception budgets.
//!
//! Scenario: front vehicle brakes at `a_max_brake` from t = 0; the rear
//! vehicle, believing itself exactly at the RSS safe distance, accelerates at
//! `a_max_accel` for the reaction time and then brakes at `a_min_brake` until
//! standstill. The actual gap starts at `d_min - pos_error`. Positions follow
//! the closed-form piecewise kinematics per regime evaluated on the `dt` grid,
//! so there is no accumulated integration error; only the collision-detection
//! instant is quantized to `dt`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{rss_min_distance, RssParams};
use crate::units::kmh_to_ms;

#[derive(Debug, Error, PartialEq)]
pub enum SeverityError {
    #[error("position error {pos_error:.3} m is not below the safe distance {d_min:.3} m (invalid region)")]
    InvalidErrorRegionFour { pos_error: f64, d_min: f64 },
    #[error("position error must be non-negative, got {0}")]
    NegativeError(f64),
    #[error("severity never exceeds the configured limit over the valid error range")]
    NeverExceeds,
    #[error("severity exceeds the configured limit for every probed error")]
    AlwaysExceeds,
    #[error("severity is not monotone on the front-stopped branch")]
    NotMonotone,
    #[error("bad curve spec: need 0 <= error_min < error_max and n_points >= 2")]
    BadCurveSpec,
}

/// Scenario configuration for the severity simulation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeverityConfig {
    /// Rear (ego) initial speed, m/s.
    pub v_r: f64,
    /// Front initial speed, m/s.
    pub v_f: f64,
    pub params: RssParams,
    /// Simulation step, s.
    pub dt: f64,
    /// Maximum acceptable collision severity, m/s.
    pub dv_max: f64,
}

impl SeverityConfig {
    pub fn new(v_r: f64, v_f: f64) -> Self {
        SeverityConfig {
            v_r,
            v_f,
            params: RssParams::default(),
            dt: 0.01,
            dv_max: kmh_to_ms(50.0),
        }
    }

    pub fn d_min(&self) -> f64 {
        rss_min_distance(self.v_r, self.v_f, &self.params)
    }
}

/// Which kinematic regime the collision fell into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    /// Front vehicle already at standstill at contact.
    FrontStopped,
    /// Both vehicles braking at contact.
    MutualBraking,
    /// Contact during the rear vehicle's reaction/acceleration phase.
    ReactionPhase,
    /// Position error at or beyond the safe distance; no meaningful scenario.
    Invalid,
}

impl Segment {
    /// Stable 1-4 code used in CSV output.
    pub fn code(&self) -> u8 {
        match self {
            Segment::FrontStopped => 1,
            Segment::MutualBraking => 2,
            Segment::ReactionPhase => 3,
            Segment::Invalid => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeltaVOutcome {
    Collision { delta_v: f64, segment: Segment },
    NoCollision,
}

/// Closed-form longitudinal state of the braking pair at time `t`.
struct PairKinematics {
    t1: f64,
    t2: f64,
    t3: f64,
    v1: f64,
    d_react: f64,
    rear_total: f64,
    front_total: f64,
    cfg: SeverityConfig,
}

impl PairKinematics {
    fn new(cfg: &SeverityConfig) -> Self {
        let p = &cfg.params;
        let t1 = p.rho;
        let v1 = cfg.v_r + p.a_max_accel * t1;
        let t2 = t1 + v1 / p.a_min_brake;
        let t3 = cfg.v_f / p.a_max_brake;
        let d_react = cfg.v_r * t1 + 0.5 * p.a_max_accel * t1 * t1;
        PairKinematics {
            t1,
            t2,
            t3,
            v1,
            d_react,
            rear_total: d_react + v1 * v1 / (2.0 * p.a_min_brake),
            front_total: cfg.v_f * cfg.v_f / (2.0 * p.a_max_brake),
            cfg: *cfg,
        }
    }

    fn rear(&self, t: f64) -> (f64, f64) {
        let p = &self.cfg.params;
        if t <= self.t1 {
            (
                self.cfg.v_r * t + 0.5 * p.a_max_accel * t * t,
                self.cfg.v_r + p.a_max_accel * t,
            )
        } else if t <= self.t2 {
            let s = t - self.t1;
            (
                self.d_react + self.v1 * s - 0.5 * p.a_min_brake * s * s,
                self.v1 - p.a_min_brake * s,
            )
        } else {
            (self.rear_total, 0.0)
        }
    }

    fn front(&self, t: f64) -> (f64, f64) {
        let p = &self.cfg.params;
        if t <= self.t3 {
            (
                self.cfg.v_f * t - 0.5 * p.a_max_brake * t * t,
                self.cfg.v_f - p.a_max_brake * t,
            )
        } else {
            (self.front_total, 0.0)
        }
    }

    fn segment_at(&self, t: f64) -> Segment {
        if t > self.t3 {
            Segment::FrontStopped
        } else if t > self.t1 {
            Segment::MutualBraking
        } else {
            Segment::ReactionPhase
        }
    }
}

// Gap strictly below this counts as contact; the e = 0 boundary case closes
// to a zero gap up to float rounding and must not register as a collision.
const CONTACT_EPS: f64 = 1e-9;

/// Simulate the deceleration scenario under a position error and return the
/// relative speed at first contact, or `NoCollision` when both vehicles stop
/// with a non-negative gap.
pub fn simulate_delta_v(
    cfg: &SeverityConfig,
    pos_error: f64,
) -> Result<DeltaVOutcome, SeverityError> {
    if pos_error < 0.0 {
        return Err(SeverityError::NegativeError(pos_error));
    }
    let d_min = cfg.d_min();
    let d_a0 = d_min - pos_error;
    // A zero injected error is always simulable, even when the safe distance
    // itself is zero (rear much slower than front): the gap starts at zero and
    // only contact below zero counts.
    if d_a0 <= 0.0 && pos_error > 0.0 {
        return Err(SeverityError::InvalidErrorRegionFour { pos_error, d_min });
    }
    let kin = PairKinematics::new(cfg);
    let t_end = kin.t2.max(kin.t3);
    let n_steps = (t_end / cfg.dt).ceil() as usize + 1;
    for k in 0..=n_steps {
        let t = k as f64 * cfg.dt;
        let (x_r, v_r) = kin.rear(t);
        let (x_f, v_f) = kin.front(t);
        let gap = d_a0 + x_f - x_r;
        if gap < -CONTACT_EPS {
            return Ok(DeltaVOutcome::Collision {
                delta_v: v_r - v_f,
                segment: kin.segment_at(t),
            });
        }
    }
    Ok(DeltaVOutcome::NoCollision)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PointOutcome {
    Collision {
        delta_v: f64,
        segment: Segment,
    },
    NoCollision,
    /// Error at or beyond the safe distance (region 4), no simulation run.
    Invalid,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub pos_error: f64,
    pub outcome: PointOutcome,
}

impl CurvePoint {
    pub fn segment(&self) -> Option<Segment> {
        match self.outcome {
            PointOutcome::Collision { segment, .. } => Some(segment),
            PointOutcome::Invalid => Some(Segment::Invalid),
            PointOutcome::NoCollision => None,
        }
    }

    pub fn delta_v(&self) -> Option<f64> {
        match self.outcome {
            PointOutcome::Collision { delta_v, .. } => Some(delta_v),
            _ => None,
        }
    }
}

/// Sampled error → severity relation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeverityCurve {
    pub config: SeverityConfig,
    pub points: Vec<CurvePoint>,
}

/// Sample the severity relation on `n_points` evenly spaced errors. Invalid
/// errors (at or beyond the safe distance) are kept in-band as `Invalid`.
pub fn severity_curve(
    cfg: &SeverityConfig,
    error_min: f64,
    error_max: f64,
    n_points: usize,
) -> Result<SeverityCurve, SeverityError> {
    if !(error_min >= 0.0 && error_min < error_max && n_points >= 2) {
        return Err(SeverityError::BadCurveSpec);
    }
    let step = (error_max - error_min) / (n_points - 1) as f64;
    let points: Vec<CurvePoint> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let e = error_min + step * i as f64;
            let outcome = match simulate_delta_v(cfg, e) {
                Ok(DeltaVOutcome::Collision { delta_v, segment }) => {
                    PointOutcome::Collision { delta_v, segment }
                }
                Ok(DeltaVOutcome::NoCollision) => PointOutcome::NoCollision,
                Err(SeverityError::InvalidErrorRegionFour { .. }) => PointOutcome::Invalid,
                Err(e) => unreachable!("unexpected severity error on curve point: {e}"),
            };
            CurvePoint {
                pos_error: e,
                outcome,
            }
        })
        .collect();
    Ok(SeverityCurve {
        config: *cfg,
        points,
    })
}

/// Largest position error whose severity stays within `cfg.dv_max`, found by
/// bisection to 0.01 m on the front-stopped (monotone) branch.
///
/// The inversion is scoped to that branch: the mutual-braking plateau equals
/// the branch's end value and the reaction-phase severity falls below it, so
/// for the parameter sets of interest the branch maximum is the global one.
pub fn max_allowable_position_error(cfg: &SeverityConfig) -> Result<f64, SeverityError> {
    let d_min = cfg.d_min();
    let n_probe = 256usize;
    let mut seg1_pts: Vec<(f64, f64)> = Vec::new();
    let mut any_collision = false;
    let mut global_max = 0.0f64;
    for i in 1..n_probe {
        let e = d_min * i as f64 / n_probe as f64;
        match simulate_delta_v(cfg, e) {
            Ok(DeltaVOutcome::Collision { delta_v, segment }) => {
                any_collision = true;
                global_max = global_max.max(delta_v);
                if segment == Segment::FrontStopped {
                    seg1_pts.push((e, delta_v));
                }
            }
            Ok(DeltaVOutcome::NoCollision) => {}
            Err(SeverityError::InvalidErrorRegionFour { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if !any_collision {
        return Err(SeverityError::NeverExceeds);
    }
    // Monotonicity check on the branch (allow one dt worth of jitter).
    let jitter = cfg.params.a_min_brake * cfg.dt + 1e-9;
    for w in seg1_pts.windows(2) {
        if w[1].1 < w[0].1 - jitter {
            return Err(SeverityError::NotMonotone);
        }
    }
    if global_max <= cfg.dv_max {
        return Err(SeverityError::NeverExceeds);
    }
    match seg1_pts.first() {
        Some(&(_, dv_first)) if dv_first > cfg.dv_max => return Err(SeverityError::AlwaysExceeds),
        None => return Err(SeverityError::AlwaysExceeds),
        _ => {}
    }

    // Bracket the crossing on the branch.
    let mut lo = None;
    let mut hi = None;
    for &(e, dv) in &seg1_pts {
        if dv <= cfg.dv_max {
            lo = Some(e);
        } else {
            hi = Some(e);
            break;
        }
    }
    let lo = lo.ok_or(SeverityError::AlwaysExceeds)?;
    let Some(hi) = hi else {
        // The branch never crosses the limit; the global max must have come
        // from a later segment. Report the branch end as the budget.
        return Ok(seg1_pts.last().unwrap().0);
    };

    let exceeds = |e: f64| -> f64 {
        match simulate_delta_v(cfg, e) {
            Ok(DeltaVOutcome::Collision { delta_v, .. }) if delta_v > cfg.dv_max => 1.0,
            _ => -1.0,
        }
    };
    crate::numeric::bisect(lo, hi, 0.01, exceeds).map_err(|_| SeverityError::NotMonotone)
}

/// Position error induced by overestimating the front vehicle's speed by
/// `e_v`: the perceived safe distance shrinks by exactly this amount.
pub fn velocity_error_to_position_error(e_v: f64, v_f: f64, p: &RssParams) -> f64 {
    ((v_f + e_v) * (v_f + e_v) - v_f * v_f) / (2.0 * p.a_max_brake)
}

/// Largest front-speed overestimate whose induced position error stays within
/// `pos_budget` for any front speed up to `v_f_max` (closed-form inverse of
/// [`velocity_error_to_position_error`] at the worst case `v_f = v_f_max`).
pub fn max_allowable_velocity_error(pos_budget: f64, v_f_max: f64, p: &RssParams) -> f64 {
    (v_f_max * v_f_max + 2.0 * p.a_max_brake * pos_budget).sqrt() - v_f_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ms_to_kmh;

    fn case_one() -> SeverityConfig {
        SeverityConfig::new(kmh_to_ms(130.0), kmh_to_ms(80.0))
    }

    fn case_two() -> SeverityConfig {
        SeverityConfig::new(kmh_to_ms(80.0), kmh_to_ms(80.0))
    }

    #[test]
    fn delta_v_at_17m_matches_closed_form() {
        // On the front-stopped branch the contact speed is sqrt(2 * a_min_brake * e).
        let out = simulate_delta_v(&case_one(), 17.0).unwrap();
        let DeltaVOutcome::Collision { delta_v, segment } = out else {
            panic!("expected collision")
        };
        assert_eq!(segment, Segment::FrontStopped);
        let expected = (2.0f64 * 6.0 * 17.0).sqrt();
        assert!(
            (delta_v - expected).abs() < 0.1,
            "dv = {delta_v}, expect {expected}"
        );
        let kmh = ms_to_kmh(delta_v);
        assert!((kmh - 51.4).abs() < 0.5, "dv = {kmh} km/h");
        assert!((kmh - 50.0).abs() < 2.0);
    }

    #[test]
    fn front_stopped_branch_matches_closed_form_everywhere() {
        // With the rear's braking distance exactly absorbed by the safe
        // distance, the residual braking distance at the front's rest position
        // equals the injected error, so contact speed is sqrt(2 * a_min * e)
        // along the whole branch.
        let cfg = case_one();
        let tol = cfg.params.a_min_brake * cfg.dt + 1e-9;
        for k in 1..=15 {
            let e = 2.0 * k as f64;
            let out = simulate_delta_v(&cfg, e).unwrap();
            let DeltaVOutcome::Collision { delta_v, segment } = out else {
                panic!("expected collision at {e}")
            };
            if segment != Segment::FrontStopped {
                break;
            }
            let expected = (2.0 * cfg.params.a_min_brake * e).sqrt();
            assert!(
                (delta_v - expected).abs() <= tol,
                "e = {e}: dv = {delta_v}, closed form {expected}"
            );
        }
    }

    #[test]
    fn zero_error_never_collides() {
        assert_eq!(
            simulate_delta_v(&case_one(), 0.0).unwrap(),
            DeltaVOutcome::NoCollision
        );
        assert_eq!(
            simulate_delta_v(&case_two(), 0.0).unwrap(),
            DeltaVOutcome::NoCollision
        );
    }

    #[test]
    fn zero_error_never_collides_across_speed_grid() {
        for vr_kmh in (0..=140).step_by(20) {
            for vf_kmh in (0..=140).step_by(20) {
                let cfg = SeverityConfig::new(kmh_to_ms(vr_kmh as f64), kmh_to_ms(vf_kmh as f64));
                assert_eq!(
                    simulate_delta_v(&cfg, 0.0).unwrap(),
                    DeltaVOutcome::NoCollision,
                    "collided at ({vr_kmh}, {vf_kmh}) km/h"
                );
            }
        }
    }

    #[test]
    fn region_four_is_an_error() {
        let cfg = case_one();
        let d_min = cfg.d_min();
        let err = simulate_delta_v(&cfg, d_min + 1.0).unwrap_err();
        assert!(matches!(err, SeverityError::InvalidErrorRegionFour { .. }));
    }

    #[test]
    fn mutual_braking_plateau_is_reaction_gain_plus_front_loss() {
        // During mutual braking at equal rates the relative speed is frozen at
        // its end-of-reaction value: dv0 + rho * (a_max_accel + a_max_brake).
        let cfg = case_two();
        let expected = 0.75 * (3.0 + 6.0);
        for e in [6.0, 10.0, 15.0, 20.0] {
            let out = simulate_delta_v(&cfg, e).unwrap();
            let DeltaVOutcome::Collision { delta_v, segment } = out else {
                panic!("expected collision at {e}")
            };
            assert_eq!(segment, Segment::MutualBraking, "e = {e}");
            assert!((delta_v - expected).abs() < 0.07, "e = {e}: dv = {delta_v}");
        }
    }

    #[test]
    fn equal_speed_curve_has_all_segments_in_order() {
        let cfg = case_two();
        let d_min = cfg.d_min();
        let curve = severity_curve(&cfg, 0.0, d_min + 2.0, 120).unwrap();
        let codes: Vec<u8> = curve
            .points
            .iter()
            .filter_map(|p| p.segment())
            .map(|s| s.code())
            .collect();
        let mut dedup = codes.clone();
        dedup.dedup();
        assert_eq!(dedup, vec![1, 2, 3, 4], "segment order was {dedup:?}");
    }

    #[test]
    fn front_stopped_branch_is_monotone_for_case_one() {
        let cfg = case_one();
        let curve = severity_curve(&cfg, 0.0, 30.0, 31).unwrap();
        let mut prev = -1.0;
        for p in &curve.points {
            if let PointOutcome::Collision { delta_v, segment } = p.outcome {
                assert_eq!(segment, Segment::FrontStopped);
                assert!(delta_v >= prev - 0.07, "dip at {}", p.pos_error);
                prev = delta_v;
            }
        }
    }

    #[test]
    fn curve_with_two_points_samples_endpoints() {
        let cfg = case_one();
        let curve = severity_curve(&cfg, 1.0, 2.0, 2).unwrap();
        assert_eq!(curve.points.len(), 2);
        assert_eq!(curve.points[0].pos_error, 1.0);
        assert_eq!(curve.points[1].pos_error, 2.0);
    }

    #[test]
    fn position_budget_anchor() {
        let e = max_allowable_position_error(&case_one()).unwrap();
        assert!((e - 17.0).abs() <= 1.0, "budget = {e}");
        // Sharper pin: the closed form gives dv_max^2 / (2 a_min_brake).
        let exact = kmh_to_ms(50.0).powi(2) / 12.0;
        assert!((e - exact).abs() < 0.2, "budget = {e}, exact {exact}");
    }

    #[test]
    fn budget_boundary_is_tight() {
        let cfg = case_one();
        let e = max_allowable_position_error(&cfg).unwrap();
        let at = |e: f64| match simulate_delta_v(&cfg, e).unwrap() {
            DeltaVOutcome::Collision { delta_v, .. } => delta_v,
            DeltaVOutcome::NoCollision => 0.0,
        };
        assert!(at(e - 0.02) <= cfg.dv_max + 0.07);
        assert!(at(e + 0.02) > cfg.dv_max - 0.07);
    }

    #[test]
    fn equal_speed_case_never_exceeds_50kmh() {
        let err = max_allowable_position_error(&case_two()).unwrap_err();
        assert_eq!(err, SeverityError::NeverExceeds);
    }

    #[test]
    fn infinite_limit_never_exceeds() {
        let mut cfg = case_one();
        cfg.dv_max = f64::INFINITY;
        assert_eq!(
            max_allowable_position_error(&cfg).unwrap_err(),
            SeverityError::NeverExceeds
        );
    }

    #[test]
    fn dt_convergence_on_anchor() {
        let mut fine = case_one();
        fine.dt = 0.001;
        let coarse = case_one();
        let dv = |cfg: &SeverityConfig| match simulate_delta_v(cfg, 17.0).unwrap() {
            DeltaVOutcome::Collision { delta_v, .. } => delta_v,
            _ => panic!(),
        };
        let diff = (dv(&coarse) - dv(&fine)).abs();
        assert!(ms_to_kmh(diff) <= 0.5, "dt drift {diff} m/s");
    }

    #[test]
    fn velocity_error_mapping_anchors() {
        let p = RssParams::default();
        let e1 = velocity_error_to_position_error(kmh_to_ms(10.0), kmh_to_ms(130.0), &p);
        assert!((e1 - 17.36).abs() < 0.01, "e1 = {e1}");
        let e2 = velocity_error_to_position_error(kmh_to_ms(5.0), kmh_to_ms(130.0), &p);
        assert!((e2 - 8.52).abs() < 0.01, "e2 = {e2}");
        assert_eq!(velocity_error_to_position_error(0.0, 40.0, &p), 0.0);
    }

    #[test]
    fn velocity_error_matches_rss_distance_shift_exactly() {
        // Algebraic identity: feeding an overestimated front speed into the
        // RSS distance shifts it by exactly the mapped position error.
        let p = RssParams::default();
        for (e_v, v_f) in [(1.0, 30.0), (2.778, 36.111), (5.0, 20.0)] {
            let shift = rss_min_distance(36.111, v_f, &p) - rss_min_distance(36.111, v_f + e_v, &p);
            let mapped = velocity_error_to_position_error(e_v, v_f, &p);
            assert!(
                (shift - mapped).abs() < 1e-9,
                "shift {shift} vs mapped {mapped}"
            );
        }
    }

    #[test]
    fn velocity_budget_anchor() {
        let p = RssParams::default();
        let e_v = max_allowable_velocity_error(17.0, kmh_to_ms(130.0), &p);
        let kmh = ms_to_kmh(e_v);
        assert!((9.0..=11.0).contains(&kmh), "budget = {kmh} km/h");
        // Inverse of the 8.52 m mapping recovers 5 km/h.
        let e_v2 = ms_to_kmh(max_allowable_velocity_error(8.52, kmh_to_ms(130.0), &p));
        assert!((e_v2 - 5.0).abs() < 0.1, "e_v2 = {e_v2}");
        // Vanishing budget gives vanishing allowance.
        assert!(max_allowable_velocity_error(1e-12, kmh_to_ms(130.0), &p) < 1e-6);
    }
}
