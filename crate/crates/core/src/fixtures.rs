//! Deterministic synthetic trajectory recordings.
//!
//! These builders produce highD-shaped [`TrackSet`]s entirely in memory, with
//! closed-form kinematics so tests can hand-compute expected crossing frames,
//! gaps and collision outcomes. The CLI's built-in demo pipeline serializes
//! them through the regular CSV path, so the ingest code is exercised too.

use std::collections::BTreeMap;

use crate::trajectory::{RecordingMeta, Track, TrackSample, TrackSet, VehicleClass};

/// A vehicle holding constant speed and lateral position.
#[derive(Debug, Clone)]
pub struct ConstantTrackSpec {
    pub id: u64,
    pub x0: f64,
    pub vx: f64,
    pub y: f64,
    pub lane_id: i64,
    pub width: f64,
    pub height: f64,
    pub class: VehicleClass,
}

/// A vehicle that keeps constant longitudinal speed and drifts laterally from
/// `y0` toward `target_y` at `vy` (signed), starting at `move_frame`.
#[derive(Debug, Clone)]
pub struct CutInTrackSpec {
    pub id: u64,
    pub x0: f64,
    pub vx: f64,
    pub y0: f64,
    pub vy: f64,
    pub move_frame: u64,
    pub target_y: f64,
    pub width: f64,
    pub height: f64,
    pub class: VehicleClass,
}

/// One longitudinal acceleration phase of a [`ManeuverTrackSpec`].
#[derive(Debug, Clone, Copy)]
pub struct PhaseSpec {
    pub frames: u64,
    pub ax: f64,
}

/// A vehicle with piecewise-constant longitudinal acceleration and an optional
/// lateral lane change. Speed floors at zero.
#[derive(Debug, Clone)]
pub struct ManeuverTrackSpec {
    pub id: u64,
    pub x0: f64,
    pub vx0: f64,
    pub y0: f64,
    pub vy: f64,
    pub move_frame: u64,
    pub target_y: f64,
    pub width: f64,
    pub height: f64,
    pub class: VehicleClass,
    pub phases: Vec<PhaseSpec>,
}

/// In-memory builder for a synthetic recording.
#[derive(Debug, Clone)]
pub struct SyntheticRecording {
    meta: RecordingMeta,
    n_frames: u64,
    tracks: BTreeMap<u64, Track>,
}

impl SyntheticRecording {
    pub fn with_markings(frame_rate: f64, n_frames: u64, markings: Vec<f64>) -> Self {
        SyntheticRecording {
            meta: RecordingMeta {
                id: "synthetic".into(),
                frame_rate,
                lane_marking_ys: markings,
                duration: n_frames as f64 / frame_rate,
            },
            n_frames,
            tracks: BTreeMap::new(),
        }
    }

    /// Two lanes with markings at 0 / 3.75 / 7.5 m (centers 1.875 and 5.625).
    pub fn two_lane(frame_rate: f64, n_frames: u64) -> Self {
        Self::with_markings(frame_rate, n_frames, vec![0.0, 3.75, 7.5])
    }

    pub fn meta(&self) -> &RecordingMeta {
        &self.meta
    }

    fn lane_for(&self, y: f64) -> i64 {
        self.meta.lane_of(y).unwrap_or(1)
    }

    fn push(&mut self, track: Track) {
        self.tracks.insert(track.vehicle_id, track);
    }

    pub fn add_constant(&mut self, spec: ConstantTrackSpec) {
        let dt = 1.0 / self.meta.frame_rate;
        let samples = (0..self.n_frames)
            .map(|k| TrackSample {
                frame: k,
                x: spec.x0 + spec.vx * k as f64 * dt,
                y: spec.y,
                width: spec.width,
                height: spec.height,
                vx: spec.vx,
                vy: 0.0,
                ax: 0.0,
                ay: 0.0,
                lane_id: spec.lane_id,
            })
            .collect();
        self.push(Track {
            vehicle_id: spec.id,
            class: spec.class,
            samples,
        });
    }

    pub fn add_cutin(&mut self, spec: CutInTrackSpec) {
        let m = ManeuverTrackSpec {
            id: spec.id,
            x0: spec.x0,
            vx0: spec.vx,
            y0: spec.y0,
            vy: spec.vy,
            move_frame: spec.move_frame,
            target_y: spec.target_y,
            width: spec.width,
            height: spec.height,
            class: spec.class,
            phases: Vec::new(),
        };
        self.add_maneuver(m);
    }

    pub fn add_maneuver(&mut self, spec: ManeuverTrackSpec) {
        let dt = 1.0 / self.meta.frame_rate;
        let dir = spec.vx0.signum();
        let mut x = spec.x0;
        let mut speed = spec.vx0.abs();
        let mut phase_idx = 0usize;
        let mut frames_left = spec.phases.first().map(|p| p.frames).unwrap_or(0);
        let mut samples = Vec::with_capacity(self.n_frames as usize);
        for k in 0..self.n_frames {
            // Lateral state.
            let (y, vy) = if k < spec.move_frame {
                (spec.y0, 0.0)
            } else {
                let travelled = spec.vy * (k - spec.move_frame) as f64 * dt;
                let y = spec.y0 + travelled;
                let arrived =
                    (spec.vy > 0.0 && y >= spec.target_y) || (spec.vy < 0.0 && y <= spec.target_y);
                if arrived {
                    (spec.target_y, 0.0)
                } else {
                    (y, spec.vy)
                }
            };
            let ax = if phase_idx < spec.phases.len() && frames_left > 0 {
                spec.phases[phase_idx].ax
            } else {
                0.0
            };
            samples.push(TrackSample {
                frame: k,
                x,
                y,
                width: spec.width,
                height: spec.height,
                vx: dir * speed,
                vy,
                ax: dir * ax,
                ay: 0.0,
                lane_id: self.lane_for(y),
            });
            // Advance longitudinal state with the speed floored at zero.
            let v_next = speed + ax * dt;
            if v_next <= 0.0 && ax < 0.0 {
                let t_stop = speed / (-ax);
                x += dir * (speed * t_stop + 0.5 * ax * t_stop * t_stop);
                speed = 0.0;
            } else {
                x += dir * (speed * dt + 0.5 * ax * dt * dt);
                speed = v_next.max(0.0);
            }
            if frames_left > 0 {
                frames_left -= 1;
                if frames_left == 0 {
                    phase_idx += 1;
                    frames_left = spec.phases.get(phase_idx).map(|p| p.frames).unwrap_or(0);
                }
            }
        }
        self.push(Track {
            vehicle_id: spec.id,
            class: spec.class,
            samples,
        });
    }

    /// A vehicle that temporarily hops from lane 1 to lane 2 between the two
    /// given frames. Used to test interval splitting in pair extraction.
    pub fn add_lane_hopper(
        &mut self,
        id: u64,
        x0: f64,
        vx: f64,
        leave_frame: u64,
        return_frame: u64,
    ) {
        let dt = 1.0 / self.meta.frame_rate;
        let samples = (0..self.n_frames)
            .map(|k| {
                let hopped = k >= leave_frame && k < return_frame;
                let (y, lane_id) = if hopped { (5.625, 2) } else { (1.875, 1) };
                TrackSample {
                    frame: k,
                    x: x0 + vx * k as f64 * dt,
                    y,
                    width: 4.0,
                    height: 1.8,
                    vx,
                    vy: 0.0,
                    ax: 0.0,
                    ay: 0.0,
                    lane_id,
                }
            })
            .collect();
        self.push(Track {
            vehicle_id: id,
            class: VehicleClass::Car,
            samples,
        });
    }

    pub fn build(self) -> TrackSet {
        TrackSet {
            meta: self.meta,
            tracks: self.tracks,
        }
    }
}

/// A late cut-in episode: the ego (id 1) approaches fast in lane 2 while a
/// slower vehicle (id 10) merges in front of it and then brakes hard. Graded
/// early-braking policies clear it; a policy that waits for a last-moment
/// full-braking trigger does not.
pub fn late_cutin_recording() -> (TrackSet, u64, u64) {
    let mut rec = SyntheticRecording::two_lane(25.0, 750);
    rec.add_constant(ConstantTrackSpec {
        id: 1,
        x0: 0.0,
        vx: 36.111,
        y: 5.625,
        lane_id: 2,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
    });
    // Merges from lane 1 starting at t = 2 s, brakes from t = 5 s down to
    // 5 m/s, then holds. Initial center distance 110 m ahead of the ego.
    rec.add_maneuver(ManeuverTrackSpec {
        id: 10,
        x0: 110.0,
        vx0: 22.222,
        y0: 1.875,
        vy: 0.75,
        move_frame: 50,
        target_y: 5.625,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
        phases: vec![
            PhaseSpec {
                frames: 125,
                ax: 0.0,
            },
            PhaseSpec {
                frames: 72,
                ax: -6.0,
            },
        ],
    });
    (rec.build(), 1, 10)
}

/// A suite of benign cut-ins: generous gaps and mild closing speeds, so sound
/// safety policies finish them without contact.
pub fn safe_cutin_recording() -> TrackSet {
    let mut rec = SyntheticRecording::two_lane(25.0, 900);
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
    rec.add_cutin(CutInTrackSpec {
        id: 10,
        x0: 120.0,
        vx: 24.0,
        y0: 1.875,
        vy: 0.6,
        move_frame: 75,
        target_y: 5.625,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
    });
    rec.add_constant(ConstantTrackSpec {
        id: 2,
        x0: 700.0,
        vx: 23.0,
        y: 5.625,
        lane_id: 2,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
    });
    rec.add_cutin(CutInTrackSpec {
        id: 11,
        x0: 810.0,
        vx: 22.5,
        y0: 1.875,
        vy: 0.5,
        move_frame: 150,
        target_y: 5.625,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
    });
    rec.build()
}

/// Lane-keeping pairs at staggered gaps: fronts brake mildly partway through,
/// so blind-time injection has something to collide with.
pub fn following_recording() -> TrackSet {
    let mut rec = SyntheticRecording::two_lane(25.0, 750);
    let gaps = [30.0, 45.0, 70.0, 110.0, 160.0];
    let mut x = 0.0;
    for (i, gap) in gaps.iter().enumerate() {
        let rear_id = 20 + 2 * i as u64;
        let front_id = rear_id + 1;
        rec.add_constant(ConstantTrackSpec {
            id: rear_id,
            x0: x,
            vx: 27.0,
            y: 1.875,
            lane_id: 1,
            width: 4.0,
            height: 1.8,
            class: if i % 2 == 0 {
                VehicleClass::Car
            } else {
                VehicleClass::Truck
            },
        });
        rec.add_maneuver(ManeuverTrackSpec {
            id: front_id,
            x0: x + gap + 4.0,
            vx0: 24.0,
            y0: 1.875,
            vy: 0.0,
            move_frame: u64::MAX,
            target_y: 1.875,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
            phases: vec![
                PhaseSpec {
                    frames: 100,
                    ax: 0.0,
                },
                PhaseSpec {
                    frames: 150,
                    ax: -3.0,
                },
            ],
        });
        x += gap + 600.0;
    }
    rec.build()
}

/// The combined demo recording used by the CLI pipeline: benign cut-ins, one
/// late cut-in, and a set of following pairs, all in one track set.
pub fn demo_recording() -> TrackSet {
    let mut rec = SyntheticRecording::two_lane(25.0, 900);
    // Benign cut-in group around x = 0.
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
    rec.add_cutin(CutInTrackSpec {
        id: 2,
        x0: 120.0,
        vx: 24.0,
        y0: 1.875,
        vy: 0.6,
        move_frame: 75,
        target_y: 5.625,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
    });
    // Late cut-in group far downstream in the opposite-direction carriageway
    // position range to keep longitudinal spans disjoint.
    rec.add_constant(ConstantTrackSpec {
        id: 3,
        x0: 5000.0,
        vx: 36.111,
        y: 5.625,
        lane_id: 2,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
    });
    rec.add_maneuver(ManeuverTrackSpec {
        id: 4,
        x0: 5110.0,
        vx0: 22.222,
        y0: 1.875,
        vy: 0.75,
        move_frame: 50,
        target_y: 5.625,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
        phases: vec![
            PhaseSpec {
                frames: 125,
                ax: 0.0,
            },
            PhaseSpec {
                frames: 72,
                ax: -6.0,
            },
        ],
    });
    // Following pairs in lane 1, staggered. Fronts brake mildly partway
    // through; the recorded rears ease off behind them and settle slightly
    // slower, so the recording itself stays contact-free at every frame.
    let gaps = [30.0, 45.0, 70.0, 110.0, 160.0];
    let mut x = 0.0;
    for (i, gap) in gaps.iter().enumerate() {
        let rear_id = 20 + 2 * i as u64;
        rec.add_maneuver(ManeuverTrackSpec {
            id: rear_id,
            x0: x,
            vx0: 27.0,
            y0: 1.875,
            vy: 0.0,
            move_frame: u64::MAX,
            target_y: 1.875,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
            phases: vec![
                PhaseSpec {
                    frames: 50,
                    ax: 0.0,
                },
                PhaseSpec {
                    frames: 150,
                    ax: -3.0,
                },
                PhaseSpec {
                    frames: 25,
                    ax: -4.0,
                },
            ],
        });
        rec.add_maneuver(ManeuverTrackSpec {
            id: rear_id + 1,
            x0: x + gap + 4.0,
            vx0: 24.0,
            y0: 1.875,
            vy: 0.0,
            move_frame: u64::MAX,
            target_y: 1.875,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
            phases: vec![
                PhaseSpec {
                    frames: 100,
                    ax: 0.0,
                },
                PhaseSpec {
                    frames: 150,
                    ax: -3.0,
                },
            ],
        });
        x += gap + 700.0;
    }
    // A pair whose front brakes to a stop: the recorded rear reacts a second
    // later and keeps a small margin, while a blacked-out replay does not.
    rec.add_maneuver(ManeuverTrackSpec {
        id: 40,
        x0: 9000.0,
        vx0: 27.0,
        y0: 1.875,
        vy: 0.0,
        move_frame: u64::MAX,
        target_y: 1.875,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
        phases: vec![
            PhaseSpec {
                frames: 25,
                ax: 0.0,
            },
            PhaseSpec {
                frames: 113,
                ax: -6.0,
            },
        ],
    });
    rec.add_maneuver(ManeuverTrackSpec {
        id: 41,
        x0: 9049.0,
        vx0: 24.0,
        y0: 1.875,
        vy: 0.0,
        move_frame: u64::MAX,
        target_y: 1.875,
        width: 4.0,
        height: 1.8,
        class: VehicleClass::Car,
        phases: vec![PhaseSpec {
            frames: 100,
            ax: -6.0,
        }],
    });
    rec.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::validate_trackset;

    #[test]
    fn builders_produce_valid_tracksets() {
        for ts in [
            safe_cutin_recording(),
            following_recording(),
            demo_recording(),
            late_cutin_recording().0,
        ] {
            let report = validate_trackset(&ts);
            assert!(
                report.is_clean(),
                "unexpected violations: {:?}",
                report.entries
            );
            for track in ts.tracks.values() {
                assert!(!track.samples.is_empty());
            }
        }
    }

    #[test]
    fn demo_recording_supports_the_pipeline() {
        use crate::bayes::{inject_fn_and_simulate, PartitionScheme};
        use crate::behavior::RssParams;
        use crate::scenario::{
            detect_cutins, extract_following_pairs, filter_cutins, WanderingZone,
        };

        let ts = demo_recording();
        let cutins = detect_cutins(&ts, &WanderingZone::default());
        let kept = filter_cutins(&cutins, &ts, 5.0, true).unwrap();
        assert!(
            kept.iter().any(|c| c.cutin_id == 4 && c.ego_id == Some(3)),
            "late cut-in must survive the filters: {kept:?}"
        );

        let pairs = extract_following_pairs(&ts, 5.0);
        let stop_pair = pairs
            .iter()
            .find(|p| p.rear_id == 40 && p.front_id == 41)
            .expect("stopping pair must be mined");
        assert!(
            stop_pair.frame_span.1 - stop_pair.frame_span.0 >= 800,
            "recorded stopping pair must stay apart: span {:?}",
            stop_pair.frame_span
        );
        let scheme = PartitionScheme::default();
        assert_eq!(
            scheme.index_of(stop_pair.initial_state.2),
            Some(1),
            "onset gap in [25, 50)"
        );
        let params = RssParams::default();
        let blind = inject_fn_and_simulate(stop_pair, &ts, 1.0, &params, 0.01).unwrap();
        assert!(
            blind.relevant,
            "one-second blackout must be fatal for the stopping pair"
        );
        let sighted = inject_fn_and_simulate(stop_pair, &ts, 0.0, &params, 0.01).unwrap();
        assert!(
            !sighted.relevant,
            "the policy must manage the stopping pair when sighted"
        );
    }

    #[test]
    fn maneuver_speed_floors_at_zero() {
        let mut rec = SyntheticRecording::two_lane(25.0, 200);
        rec.add_maneuver(ManeuverTrackSpec {
            id: 5,
            x0: 0.0,
            vx0: 10.0,
            y0: 1.875,
            vy: 0.0,
            move_frame: u64::MAX,
            target_y: 1.875,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
            phases: vec![PhaseSpec {
                frames: 150,
                ax: -6.0,
            }],
        });
        let ts = rec.build();
        let track = &ts.tracks[&5];
        let last = track.samples.last().unwrap();
        assert_eq!(last.vx, 0.0);
        // Stopping distance 10^2 / (2*6).
        assert!((last.x - 100.0 / 12.0).abs() < 0.2);
    }
}
