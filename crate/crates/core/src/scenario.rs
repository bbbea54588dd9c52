//! Mining of cut-in episodes and lane-keeping following pairs from a track set.
//!
//! A cut-in is keyed to five frame timestamps: T0 when the vehicle leaves the
//! wandering zone of its origin lane moving toward the target lane, T1 when
//! the leading-side front corner crosses the lane marking, T2 when the box
//! center crosses, T3 when the trailing-side rear corner crosses, and T4 when
//! the lateral offset re-enters the wandering zone of the target lane.
//! Crossings between frames resolve to the frame that contains them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{Track, TrackSet, VehicleClass};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario references vehicle {0} which is not in the track set")]
    DanglingReference(u64),
    #[error("gap must be positive")]
    NonPositiveGap,
}

/// Lateral-offset band a lane-keeping vehicle stays within; leaving it marks
/// cut-in onset. Default half-width 0.375 m.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WanderingZone {
    pub half_width: f64,
}

impl Default for WanderingZone {
    fn default() -> Self {
        WanderingZone { half_width: 0.375 }
    }
}

/// Lateral sense of a cut-in, in recording coordinates (left-to-right means
/// increasing y). The leading/trailing corners of T1/T3 mirror with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutInDirection {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutInScenario {
    /// Nearest rear vehicle in the target lane at T2, when one exists within
    /// 200 m. Scenarios without an ego are dropped by [`filter_cutins`].
    pub ego_id: Option<u64>,
    pub cutin_id: u64,
    pub t0: u64,
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
    pub t4: u64,
    pub direction: CutInDirection,
    /// Minimum time-to-collision over [T0, T4]; +inf when never closing.
    #[serde(
        serialize_with = "crate::scenario::ser_maybe_inf",
        deserialize_with = "crate::scenario::de_maybe_inf"
    )]
    pub min_ttc: f64,
}

pub(crate) fn ser_maybe_inf<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

pub(crate) fn de_maybe_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let v: Option<f64> = Option::deserialize(d)?;
    Ok(v.unwrap_or(f64::INFINITY))
}

/// A lane-keeping vehicle pair: `rear_id` directly follows `front_id` in the
/// same lane over `frame_span`, with positive bumper-to-bumper gap throughout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FollowingScenario {
    pub rear_id: u64,
    pub front_id: u64,
    pub frame_span: (u64, u64),
    /// (rear speed m/s, front speed m/s, bumper gap m) at the first frame.
    pub initial_state: (f64, f64, f64),
    pub rear_class: VehicleClass,
}

/// Longitudinal time-to-collision: `gap / (v_rear - v_front)` when closing,
/// +inf otherwise. The gap must be positive.
pub fn compute_ttc(gap: f64, v_rear: f64, v_front: f64) -> Result<f64, ScenarioError> {
    if gap <= 0.0 {
        return Err(ScenarioError::NonPositiveGap);
    }
    if v_rear > v_front {
        Ok(gap / (v_rear - v_front))
    } else {
        Ok(f64::INFINITY)
    }
}

/// Bumper-to-bumper gap between a rear and a front sample along driving
/// direction `s` (+1 toward +x).
pub fn bumper_gap(
    rear: &crate::trajectory::TrackSample,
    front: &crate::trajectory::TrackSample,
    s: f64,
) -> f64 {
    s * (front.x - rear.x) - 0.5 * (front.width + rear.width)
}

struct CutInCandidate {
    t2_idx: usize,
    marking: f64,
    origin_lane: i64,
    target_lane: i64,
    sigma: f64,
}

fn center_crossings(track: &Track, markings: &[f64], lane_count: usize) -> Vec<CutInCandidate> {
    let mut out = Vec::new();
    for k in 1..track.samples.len() {
        let y_prev = track.samples[k - 1].y;
        let y_next = track.samples[k].y;
        for (i, &m) in markings.iter().enumerate() {
            let crossed_up = y_prev < m && y_next >= m;
            let crossed_down = y_prev > m && y_next <= m;
            if !(crossed_up || crossed_down) {
                continue;
            }
            let sigma = if crossed_up { 1.0 } else { -1.0 };
            let (origin_lane, target_lane) = if crossed_up {
                (i as i64, i as i64 + 1)
            } else {
                (i as i64 + 1, i as i64)
            };
            // Crossing the outermost marking leaves the road; not a cut-in.
            if origin_lane < 1
                || target_lane < 1
                || origin_lane as usize > lane_count
                || target_lane as usize > lane_count
            {
                continue;
            }
            out.push(CutInCandidate {
                t2_idx: k,
                marking: m,
                origin_lane,
                target_lane,
                sigma,
            });
        }
    }
    out
}

/// Detect cut-in scenarios across all tracks.
///
/// Returns an empty list when nothing qualifies. Candidates whose lateral
/// motion never completes (trailing corner never crosses, or the offset never
/// settles into the target-lane wandering zone) are discarded. Output order is
/// fixed by (ego id, T0, cut-in id) for determinism.
pub fn detect_cutins(ts: &TrackSet, wz: &WanderingZone) -> Vec<CutInScenario> {
    let markings = &ts.meta.lane_marking_ys;
    let lane_count = ts.meta.lane_count();
    let mut scenarios = Vec::new();

    for track in ts.tracks.values() {
        if track.samples.len() < 2 {
            continue;
        }
        let s_dir = track.direction_sign();
        let candidates = center_crossings(track, markings, lane_count);
        for (ci, cand) in candidates.iter().enumerate() {
            let h = track.samples[cand.t2_idx].height;
            let past = |y: f64| cand.sigma * (y - cand.marking) >= 0.0;
            let lead = |k: usize| track.samples[k].y + cand.sigma * 0.5 * h;
            let trail = |k: usize| track.samples[k].y - cand.sigma * 0.5 * h;

            // T1: walk back from T2 to the onset of the leading-corner crossing.
            let mut t1_idx = cand.t2_idx;
            while t1_idx > 0 && past(lead(t1_idx - 1)) {
                t1_idx -= 1;
            }

            // T3: first frame at or after T2 where the trailing corner has crossed.
            let mut t3_idx = cand.t2_idx;
            let mut t3_found = false;
            while t3_idx < track.samples.len() {
                if past(trail(t3_idx)) {
                    t3_found = true;
                    break;
                }
                t3_idx += 1;
            }
            if !t3_found {
                continue;
            }

            // T0: last frame before the offset from the origin-lane center
            // exceeds the wandering zone toward the target lane.
            let origin_center = match ts.meta.lane_center(cand.origin_lane) {
                Some(c) => c,
                None => continue,
            };
            let target_center = match ts.meta.lane_center(cand.target_lane) {
                Some(c) => c,
                None => continue,
            };
            let offset = |k: usize| cand.sigma * (track.samples[k].y - origin_center);
            let mut t0_idx = t1_idx;
            while t0_idx > 0 && offset(t0_idx) > wz.half_width {
                t0_idx -= 1;
            }

            // T4: first frame at or after T3 inside the target wandering zone,
            // before any further center-crossing.
            let next_crossing = candidates
                .get(ci + 1..)
                .unwrap_or_default()
                .iter()
                .map(|c| c.t2_idx)
                .find(|&k| k > cand.t2_idx)
                .unwrap_or(track.samples.len());
            let mut t4_idx = t3_idx;
            let mut t4_found = false;
            while t4_idx < next_crossing {
                if (track.samples[t4_idx].y - target_center).abs() <= wz.half_width {
                    t4_found = true;
                    break;
                }
                t4_idx += 1;
            }
            if !t4_found {
                continue;
            }

            let frame_of = |idx: usize| track.samples[idx].frame;
            let t2_frame = frame_of(cand.t2_idx);

            // Ego: nearest rear vehicle in the target lane at T2, within 200 m,
            // driving the same way.
            let mut ego: Option<(u64, f64)> = None;
            for other in ts.tracks.values() {
                if other.vehicle_id == track.vehicle_id {
                    continue;
                }
                let Some(os) = other.sample_at(t2_frame) else {
                    continue;
                };
                if other.direction_sign() != s_dir {
                    continue;
                }
                if ts.meta.lane_of(os.y) != Some(cand.target_lane) {
                    continue;
                }
                let dist = s_dir * (track.samples[cand.t2_idx].x - os.x);
                if dist <= 0.0 || dist > 200.0 {
                    continue;
                }
                if ego.is_none_or(|(_, best)| dist < best) {
                    ego = Some((other.vehicle_id, dist));
                }
            }

            let direction = if cand.sigma > 0.0 {
                CutInDirection::LeftToRight
            } else {
                CutInDirection::RightToLeft
            };

            let mut min_ttc = f64::INFINITY;
            if let Some((ego_id, _)) = ego {
                let ego_track = &ts.tracks[&ego_id];
                for idx in t0_idx..=t4_idx {
                    let frame = frame_of(idx);
                    let (Some(es), Some(cs)) = (ego_track.sample_at(frame), track.sample_at(frame))
                    else {
                        continue;
                    };
                    // Overlapping boxes get a vanishing positive gap so the
                    // episode registers as maximally critical instead of
                    // erroring out of the miner.
                    let gap = bumper_gap(es, cs, s_dir).max(1e-3);
                    let v_r = (s_dir * es.vx).max(0.0);
                    let v_f = (s_dir * cs.vx).max(0.0);
                    if let Ok(ttc) = compute_ttc(gap, v_r, v_f) {
                        min_ttc = min_ttc.min(ttc);
                    }
                }
            }

            let sc = CutInScenario {
                ego_id: ego.map(|(id, _)| id),
                cutin_id: track.vehicle_id,
                t0: frame_of(t0_idx),
                t1: frame_of(t1_idx),
                t2: t2_frame,
                t3: frame_of(t3_idx),
                t4: frame_of(t4_idx),
                direction,
                min_ttc,
            };
            debug_assert!(sc.t0 <= sc.t1 && sc.t1 <= sc.t2 && sc.t2 <= sc.t3 && sc.t3 <= sc.t4);
            debug_assert!(sc.min_ttc > 0.0);
            scenarios.push(sc);
        }
    }

    scenarios.sort_by_key(|sc| (sc.ego_id.unwrap_or(u64::MAX), sc.t0, sc.cutin_id));
    scenarios
}

/// Relevance filters over mined cut-ins: drops episodes whose minimum TTC over
/// [T0, T4] exceeds `ttc_threshold`, episodes without an ego, and (when
/// `car_only`) episodes involving any non-car participant. Idempotent; output
/// is a subset of the input.
pub fn filter_cutins(
    scenarios: &[CutInScenario],
    ts: &TrackSet,
    ttc_threshold: f64,
    car_only: bool,
) -> Result<Vec<CutInScenario>, ScenarioError> {
    let mut out = Vec::new();
    for sc in scenarios {
        let cutin = ts
            .track(sc.cutin_id)
            .ok_or(ScenarioError::DanglingReference(sc.cutin_id))?;
        let ego = match sc.ego_id {
            Some(id) => Some(ts.track(id).ok_or(ScenarioError::DanglingReference(id))?),
            None => None,
        };
        let Some(ego) = ego else { continue };
        if sc.min_ttc > ttc_threshold {
            continue;
        }
        if car_only && (cutin.class != VehicleClass::Car || ego.class != VehicleClass::Car) {
            continue;
        }
        out.push(sc.clone());
    }
    Ok(out)
}

/// Extract lane-keeping following pairs.
///
/// Per frame and lane, vehicles are ordered along the driving direction and
/// only directly adjacent pairs pair up. Maximal frame-contiguous runs with a
/// positive bumper gap and duration >= `min_duration` become scenarios.
pub fn extract_following_pairs(ts: &TrackSet, min_duration: f64) -> Vec<FollowingScenario> {
    use std::collections::HashMap;

    let dt = ts.dt();
    let mut frames: Vec<u64> = Vec::new();
    let (mut lo, mut hi) = (u64::MAX, 0u64);
    for t in ts.tracks.values() {
        lo = lo.min(t.first_frame());
        hi = hi.max(t.last_frame());
    }
    if lo > hi {
        return Vec::new();
    }
    frames.extend(lo..=hi);

    // (rear, front) -> frames at which the pair is directly adjacent with
    // positive gap, in increasing order.
    let mut adjacency: HashMap<(u64, u64), Vec<u64>> = HashMap::new();
    for &frame in &frames {
        // Group per (lane, direction sign).
        let mut lanes: HashMap<(i64, i8), Vec<(u64, f64)>> = HashMap::new();
        for track in ts.tracks.values() {
            let Some(s) = track.sample_at(frame) else {
                continue;
            };
            let dir = track.direction_sign() as i8;
            lanes
                .entry((s.lane_id, dir))
                .or_default()
                .push((track.vehicle_id, track.direction_sign() * s.x));
        }
        for ((_, dir), mut members) in lanes {
            members.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let s_dir = dir as f64;
            for pair in members.windows(2) {
                let (rear_id, front_id) = (pair[0].0, pair[1].0);
                let rear = ts.tracks[&rear_id].sample_at(frame).unwrap();
                let front = ts.tracks[&front_id].sample_at(frame).unwrap();
                if bumper_gap(rear, front, s_dir) > 0.0 {
                    adjacency
                        .entry((rear_id, front_id))
                        .or_default()
                        .push(frame);
                }
            }
        }
    }

    let mut out = Vec::new();
    let mut keys: Vec<(u64, u64)> = adjacency.keys().copied().collect();
    keys.sort();
    for key in keys {
        let frames = &adjacency[&key];
        let (rear_id, front_id) = key;
        let mut run_start = 0usize;
        for i in 0..frames.len() {
            let run_ends = i + 1 == frames.len() || frames[i + 1] != frames[i] + 1;
            if !run_ends {
                continue;
            }
            let start = frames[run_start];
            let end = frames[i];
            run_start = i + 1;
            if (end - start) as f64 * dt + 1e-9 < min_duration {
                continue;
            }
            let rear_track = &ts.tracks[&rear_id];
            let front_track = &ts.tracks[&front_id];
            let s_dir = rear_track.direction_sign();
            let rs = rear_track.sample_at(start).unwrap();
            let fs = front_track.sample_at(start).unwrap();
            out.push(FollowingScenario {
                rear_id,
                front_id,
                frame_span: (start, end),
                initial_state: (
                    (s_dir * rs.vx).max(0.0),
                    (s_dir * fs.vx).max(0.0),
                    bumper_gap(rs, fs, s_dir),
                ),
                rear_class: rear_track.class,
            });
        }
    }
    out.sort_by_key(|f| (f.rear_id, f.front_id, f.frame_span.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ConstantTrackSpec, CutInTrackSpec, SyntheticRecording};
    use crate::trajectory::VehicleClass;

    /// Closed-form expected crossing frame: first k with y0 + vy*k/fps > threshold,
    /// for motion starting at frame `k_move`. Independent of the miner's scan.
    fn first_frame_past(y0: f64, vy: f64, k_move: u64, threshold: f64, fps: f64) -> u64 {
        let steps = (threshold - y0) * fps / vy;
        k_move + steps.floor() as u64 + 1
    }

    fn base_recording() -> SyntheticRecording {
        SyntheticRecording::two_lane(25.0, 600)
    }

    #[test]
    fn analytic_cutin_timestamps_match_hand_computation() {
        // Lane centers 1.875 / 5.625, marking at 3.75, vehicle height 1.8,
        // lateral speed 0.5 m/s from frame 100, 25 Hz.
        let mut rec = base_recording();
        rec.add_cutin(CutInTrackSpec {
            id: 10,
            x0: 120.0,
            vx: 22.0,
            y0: 1.875,
            vy: 0.5,
            move_frame: 100,
            target_y: 5.625,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        rec.add_constant(ConstantTrackSpec {
            id: 1,
            x0: 60.0,
            vx: 22.0,
            y: 5.625,
            lane_id: 2,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        let ts = rec.build();
        let scs = detect_cutins(&ts, &WanderingZone::default());
        assert_eq!(scs.len(), 1);
        let sc = &scs[0];

        let fps = 25.0;
        // T0: last frame with offset <= 0.375 => floor(0.375*25/0.5) = 18 past move onset.
        assert_eq!(sc.t0, 100 + 18);
        assert_eq!(sc.t1, first_frame_past(1.875, 0.5, 100, 3.75 - 0.9, fps));
        assert_eq!(sc.t2, first_frame_past(1.875, 0.5, 100, 3.75, fps));
        assert_eq!(sc.t3, first_frame_past(1.875, 0.5, 100, 3.75 + 0.9, fps));
        assert_eq!(sc.t4, first_frame_past(1.875, 0.5, 100, 5.625 - 0.375, fps));
        assert_eq!(sc.direction, CutInDirection::LeftToRight);
        assert_eq!(sc.ego_id, Some(1));
        assert!(sc.t0 <= sc.t1 && sc.t1 <= sc.t2 && sc.t2 <= sc.t3 && sc.t3 <= sc.t4);
    }

    #[test]
    fn lane_keeping_track_yields_no_scenario() {
        let mut rec = base_recording();
        rec.add_constant(ConstantTrackSpec {
            id: 1,
            x0: 0.0,
            vx: 25.0,
            y: 1.875 + 0.3, // inside the wandering zone
            lane_id: 1,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        let ts = rec.build();
        assert!(detect_cutins(&ts, &WanderingZone::default()).is_empty());
    }

    #[test]
    fn right_to_left_cutin_mirrors_corners() {
        let mut rec = base_recording();
        rec.add_cutin(CutInTrackSpec {
            id: 10,
            x0: 120.0,
            vx: 22.0,
            y0: 5.625,
            vy: -0.5,
            move_frame: 100,
            target_y: 1.875,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        rec.add_constant(ConstantTrackSpec {
            id: 1,
            x0: 60.0,
            vx: 22.0,
            y: 1.875,
            lane_id: 1,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        let ts = rec.build();
        let scs = detect_cutins(&ts, &WanderingZone::default());
        assert_eq!(scs.len(), 1);
        let sc = &scs[0];
        assert_eq!(sc.direction, CutInDirection::RightToLeft);
        // Mirror of the left-to-right case: thresholds flip around the marking.
        let fps = 25.0;
        let first_below = |threshold: f64| {
            let steps = (5.625 - threshold) * fps / 0.5;
            100 + steps.floor() as u64 + 1
        };
        assert_eq!(sc.t1, first_below(3.75 + 0.9));
        assert_eq!(sc.t2, first_below(3.75));
        assert_eq!(sc.t3, first_below(3.75 - 0.9));
        assert_eq!(sc.t4, first_below(1.875 + 0.375));
    }

    #[test]
    fn reversed_driving_direction_keeps_timestamps() {
        let build = |flip: bool| {
            let sgn = if flip { -1.0 } else { 1.0 };
            let mut rec = base_recording();
            rec.add_cutin(CutInTrackSpec {
                id: 10,
                x0: sgn * 120.0,
                vx: sgn * 22.0,
                y0: 1.875,
                vy: 0.5,
                move_frame: 100,
                target_y: 5.625,
                width: 4.0,
                height: 1.8,
                class: VehicleClass::Car,
            });
            rec.add_constant(ConstantTrackSpec {
                id: 1,
                x0: sgn * 60.0,
                vx: sgn * 22.0,
                y: 5.625,
                lane_id: 2,
                width: 4.0,
                height: 1.8,
                class: VehicleClass::Car,
            });
            detect_cutins(&rec.build(), &WanderingZone::default())
        };
        let fwd = build(false);
        let rev = build(true);
        assert_eq!(fwd.len(), 1);
        assert_eq!(rev.len(), 1);
        assert_eq!(fwd[0].t0, rev[0].t0);
        assert_eq!(fwd[0].t1, rev[0].t1);
        assert_eq!(fwd[0].t2, rev[0].t2);
        assert_eq!(fwd[0].t3, rev[0].t3);
        assert_eq!(fwd[0].t4, rev[0].t4);
        assert_eq!(fwd[0].ego_id, rev[0].ego_id);
    }

    #[test]
    fn ttc_arithmetic() {
        assert_eq!(compute_ttc(10.0, 20.0, 15.0).unwrap(), 2.0);
        assert_eq!(compute_ttc(10.0, 15.0, 20.0).unwrap(), f64::INFINITY);
        assert!((compute_ttc(0.5, 30.0, 0.0).unwrap() - 1.0 / 60.0).abs() < 1e-15);
        assert_eq!(
            compute_ttc(0.0, 1.0, 0.0).unwrap_err(),
            ScenarioError::NonPositiveGap
        );
    }

    #[test]
    fn ttc_scale_covariance() {
        for k in [0.5, 2.0, 7.0] {
            let a = compute_ttc(8.0, 25.0, 23.0).unwrap();
            let b = compute_ttc(k * 8.0, k * 25.0, k * 23.0).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn scenario_with(min_ttc: f64, ego: Option<u64>) -> CutInScenario {
        CutInScenario {
            ego_id: ego,
            cutin_id: 10,
            t0: 0,
            t1: 1,
            t2: 2,
            t3: 3,
            t4: 4,
            direction: CutInDirection::LeftToRight,
            min_ttc,
        }
    }

    fn two_vehicle_ts(cutin_class: VehicleClass) -> TrackSet {
        let mut rec = base_recording();
        rec.add_constant(ConstantTrackSpec {
            id: 10,
            x0: 50.0,
            vx: 20.0,
            y: 5.625,
            lane_id: 2,
            width: 4.0,
            height: 1.8,
            class: cutin_class,
        });
        rec.add_constant(ConstantTrackSpec {
            id: 1,
            x0: 0.0,
            vx: 25.0,
            y: 5.625,
            lane_id: 2,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        rec.build()
    }

    #[test]
    fn filter_drops_by_ttc_and_class() {
        let ts = two_vehicle_ts(VehicleClass::Truck);
        let kept = filter_cutins(&[scenario_with(4.0, Some(1))], &ts, 5.0, false).unwrap();
        assert_eq!(kept.len(), 1);
        let dropped_ttc =
            filter_cutins(&[scenario_with(f64::INFINITY, Some(1))], &ts, 5.0, false).unwrap();
        assert!(dropped_ttc.is_empty());
        let dropped_class = filter_cutins(&[scenario_with(4.0, Some(1))], &ts, 5.0, true).unwrap();
        assert!(dropped_class.is_empty());
    }

    #[test]
    fn filter_is_idempotent_and_subset() {
        let ts = two_vehicle_ts(VehicleClass::Car);
        let input = vec![
            scenario_with(4.0, Some(1)),
            scenario_with(10.0, Some(1)),
            scenario_with(2.0, None),
        ];
        let once = filter_cutins(&input, &ts, 5.0, true).unwrap();
        let twice = filter_cutins(&once, &ts, 5.0, true).unwrap();
        assert_eq!(once.len(), 1);
        assert_eq!(once.len(), twice.len());
    }

    #[test]
    fn filter_reports_dangling_reference() {
        let ts = two_vehicle_ts(VehicleClass::Car);
        let mut sc = scenario_with(4.0, Some(1));
        sc.cutin_id = 999;
        assert_eq!(
            filter_cutins(&[sc], &ts, 5.0, false).unwrap_err(),
            ScenarioError::DanglingReference(999)
        );
    }

    #[test]
    fn following_pair_gap_matches_hand_arithmetic() {
        let mut rec = base_recording();
        rec.add_constant(ConstantTrackSpec {
            id: 1,
            x0: 0.0,
            vx: 25.0,
            y: 1.875,
            lane_id: 1,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        rec.add_constant(ConstantTrackSpec {
            id: 2,
            x0: 50.0,
            vx: 25.0,
            y: 1.875,
            lane_id: 1,
            width: 5.0,
            height: 1.8,
            class: VehicleClass::Truck,
        });
        let ts = rec.build();
        let pairs = extract_following_pairs(&ts, 10.0);
        assert_eq!(pairs.len(), 1);
        let p = &pairs[0];
        assert_eq!((p.rear_id, p.front_id), (1, 2));
        // gap = 50 - (4+5)/2 = 45.5
        assert!((p.initial_state.2 - 45.5).abs() < 1e-12);
        assert_eq!(p.rear_class, VehicleClass::Car);
    }

    #[test]
    fn three_vehicles_yield_adjacent_pairs_only() {
        let mut rec = base_recording();
        for (id, x0) in [(1u64, 0.0), (2, 40.0), (3, 80.0)] {
            rec.add_constant(ConstantTrackSpec {
                id,
                x0,
                vx: 25.0,
                y: 1.875,
                lane_id: 1,
                width: 4.0,
                height: 1.8,
                class: VehicleClass::Car,
            });
        }
        let ts = rec.build();
        let pairs = extract_following_pairs(&ts, 1.0);
        let keys: Vec<(u64, u64)> = pairs.iter().map(|p| (p.rear_id, p.front_id)).collect();
        assert_eq!(keys, vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn lane_change_splits_interval() {
        let mut rec = base_recording();
        rec.add_constant(ConstantTrackSpec {
            id: 2,
            x0: 50.0,
            vx: 25.0,
            y: 1.875,
            lane_id: 1,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        });
        // Rear vehicle leaves lane 1 for 100 frames in the middle.
        rec.add_lane_hopper(1, 0.0, 25.0, 250, 350);
        let ts = rec.build();
        // Full recording is 600 frames (24 s); each half-interval is just under 10 s.
        let pairs = extract_following_pairs(&ts, 12.0);
        assert!(pairs.is_empty());
        let pairs = extract_following_pairs(&ts, 8.0);
        assert_eq!(pairs.len(), 2);
    }
}
