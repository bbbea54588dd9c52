//! Surrogate fusion tracker and the external-tracker subprocess contract.
//!
//! The surrogate fuses the two detection channels per frame by footprint
//! overlap, greedily associates fused detections to live tracks by IoU against
//! a constant-velocity prediction (highest IoU first), keeps unmatched tracks
//! alive up to a maximum age, and opens new tracks from unmatched detections.
//! Everything is deterministic: ties break on stable indices.
//!
//! External trackers plug in as a subprocess: detections are written to its
//! standard input as JSON lines (one frame per line) and tracked boxes are
//! read back as JSON lines, so a real tracker can replace the surrogate
//! without code changes.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::geometry::{Box2, Box3};
use super::{DetectionFrame, PerceptionError};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Minimum IoU to associate a fused detection with a predicted track box.
    pub tau_associate: f64,
    /// Minimum footprint IoU to fuse a range detection onto a plane detection.
    pub tau_fuse: f64,
    /// Frames a track survives without a match.
    pub max_age: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            tau_associate: 0.25,
            tau_fuse: 0.2,
            max_age: 2,
        }
    }
}

/// One tracked object in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedBox {
    pub track_id: u64,
    pub box2: Box2,
    pub box3: Option<Box3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedFrame {
    pub frame: usize,
    pub boxes: Vec<TrackedBox>,
}

/// Anything that turns per-frame detections into tracked frames.
pub trait Tracker {
    fn track(
        &self,
        det_2d: &[DetectionFrame<Box2>],
        det_3d: &[DetectionFrame<Box3>],
    ) -> Result<Vec<TrackedFrame>, PerceptionError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SurrogateTracker {
    pub config: TrackerConfig,
}

impl Tracker for SurrogateTracker {
    fn track(
        &self,
        det_2d: &[DetectionFrame<Box2>],
        det_3d: &[DetectionFrame<Box3>],
    ) -> Result<Vec<TrackedFrame>, PerceptionError> {
        Ok(surrogate_mot(det_2d, det_3d, &self.config))
    }
}

struct LiveTrack {
    id: u64,
    box2: Box2,
    velocity: (f64, f64),
    age: usize,
}

struct FusedDetection {
    box2: Box2,
    box3: Option<Box3>,
}

fn fuse_frame(
    d2: &DetectionFrame<Box2>,
    d3: &DetectionFrame<Box3>,
    tau_fuse: f64,
) -> Vec<FusedDetection> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, a) in d2.boxes.iter().enumerate() {
        for (j, b) in d3.boxes.iter().enumerate() {
            let iou = a.shape.iou(&b.shape.footprint());
            if iou >= tau_fuse {
                pairs.push((i, j, iou));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut used2 = vec![false; d2.boxes.len()];
    let mut used3 = vec![false; d3.boxes.len()];
    let mut fused = Vec::new();
    for (i, j, _) in pairs {
        if used2[i] || used3[j] {
            continue;
        }
        used2[i] = true;
        used3[j] = true;
        // Range geometry wins for a fused detection; the plane detection
        // contributes existence evidence but its box may fit another object.
        fused.push(FusedDetection {
            box2: d3.boxes[j].shape.footprint(),
            box3: Some(d3.boxes[j].shape),
        });
    }
    for (i, a) in d2.boxes.iter().enumerate() {
        if !used2[i] {
            fused.push(FusedDetection {
                box2: a.shape,
                box3: None,
            });
        }
    }
    for (j, b) in d3.boxes.iter().enumerate() {
        if !used3[j] {
            fused.push(FusedDetection {
                box2: b.shape.footprint(),
                box3: Some(b.shape),
            });
        }
    }
    fused
}

/// Greedy IoU multi-object tracking over fused detections.
pub fn surrogate_mot(
    det_2d: &[DetectionFrame<Box2>],
    det_3d: &[DetectionFrame<Box3>],
    cfg: &TrackerConfig,
) -> Vec<TrackedFrame> {
    let n_frames = det_2d.len().max(det_3d.len());
    let empty2 = DetectionFrame {
        frame: 0,
        boxes: Vec::new(),
    };
    let empty3 = DetectionFrame {
        frame: 0,
        boxes: Vec::new(),
    };
    let mut tracks: Vec<LiveTrack> = Vec::new();
    let mut next_id = 0u64;
    let mut out = Vec::with_capacity(n_frames);

    for fi in 0..n_frames {
        let d2 = det_2d.get(fi).unwrap_or(&empty2);
        let d3 = det_3d.get(fi).unwrap_or(&empty3);
        let frame = det_2d
            .get(fi)
            .map(|f| f.frame)
            .or(det_3d.get(fi).map(|f| f.frame))
            .unwrap_or(fi);
        let fused = fuse_frame(d2, d3, cfg.tau_fuse);

        // Predict track boxes one frame ahead.
        let predictions: Vec<Box2> = tracks
            .iter()
            .map(|t| t.box2.shift(t.velocity.0, t.velocity.1))
            .collect();

        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for (ti, pred) in predictions.iter().enumerate() {
            for (di, det) in fused.iter().enumerate() {
                let iou = pred.iou(&det.box2);
                if iou >= cfg.tau_associate {
                    pairs.push((ti, di, iou));
                }
            }
        }
        pairs.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        });
        let mut track_used = vec![false; tracks.len()];
        let mut det_used = vec![false; fused.len()];
        let mut emitted = Vec::new();
        for (ti, di, _) in pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            let det = &fused[di];
            let old_center = tracks[ti].box2.center();
            let new_center = det.box2.center();
            tracks[ti].velocity = (new_center.0 - old_center.0, new_center.1 - old_center.1);
            tracks[ti].box2 = det.box2;
            tracks[ti].age = 0;
            emitted.push(TrackedBox {
                track_id: tracks[ti].id,
                box2: det.box2,
                box3: det.box3,
            });
        }
        // Age out unmatched tracks; coasted predictions are not emitted.
        for (ti, t) in tracks.iter_mut().enumerate() {
            if !track_used[ti] {
                t.age += 1;
                t.box2 = predictions[ti];
            }
        }
        tracks.retain(|t| t.age <= cfg.max_age);
        // New tracks from unmatched detections.
        for (di, det) in fused.iter().enumerate() {
            if det_used[di] {
                continue;
            }
            tracks.push(LiveTrack {
                id: next_id,
                box2: det.box2,
                velocity: (0.0, 0.0),
                age: 0,
            });
            emitted.push(TrackedBox {
                track_id: next_id,
                box2: det.box2,
                box3: det.box3,
            });
            next_id += 1;
        }
        emitted.sort_by_key(|b| b.track_id);
        out.push(TrackedFrame {
            frame,
            boxes: emitted,
        });
    }
    out
}

/// Wire format of one input line of the external-tracker contract.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrackerInputLine {
    pub frame: usize,
    pub det2d: Vec<super::Detection<Box2>>,
    pub det3d: Vec<super::Detection<Box3>>,
}

/// Wire format of one output line of the external-tracker contract.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrackerOutputLine {
    pub frame: usize,
    pub tracks: Vec<TrackedBox>,
}

/// Runs an external tracker process speaking the JSON-lines contract.
#[derive(Debug, Clone)]
pub struct ExternalTracker {
    /// Program plus arguments.
    pub command: Vec<String>,
}

impl Tracker for ExternalTracker {
    fn track(
        &self,
        det_2d: &[DetectionFrame<Box2>],
        det_3d: &[DetectionFrame<Box3>],
    ) -> Result<Vec<TrackedFrame>, PerceptionError> {
        let (prog, args) = self
            .command
            .split_first()
            .ok_or_else(|| PerceptionError::BadConfig("empty external tracker command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        {
            let stdin = child.stdin.as_mut().expect("piped stdin");
            for (fi, d2) in det_2d.iter().enumerate() {
                let line = TrackerInputLine {
                    frame: d2.frame,
                    det2d: d2.boxes.clone(),
                    det3d: det_3d.get(fi).map(|f| f.boxes.clone()).unwrap_or_default(),
                };
                let json = serde_json::to_string(&line)
                    .map_err(|e| PerceptionError::TrackerProtocol(e.to_string()))?;
                stdin.write_all(json.as_bytes())?;
                stdin.write_all(b"\n")?;
            }
        }
        let output = child.wait_with_output()?;
        if !output.status.success() {
            return Err(PerceptionError::ExternalTrackerFailure(
                output.status.code().unwrap_or(-1),
            ));
        }
        let text = String::from_utf8(output.stdout)
            .map_err(|e| PerceptionError::TrackerProtocol(e.to_string()))?;
        let mut frames = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parsed: TrackerOutputLine = serde_json::from_str(line)
                .map_err(|e| PerceptionError::TrackerProtocol(e.to_string()))?;
            frames.push(TrackedFrame {
                frame: parsed.frame,
                boxes: parsed.tracks,
            });
        }
        Ok(frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::Detection;

    fn frame2(frame: usize, centers: &[(f64, f64)]) -> DetectionFrame<Box2> {
        DetectionFrame {
            frame,
            boxes: centers
                .iter()
                .map(|&(x, y)| Detection {
                    id: None,
                    shape: Box2::from_center(x, y, 8.0, 8.0),
                    score: 0.9,
                })
                .collect(),
        }
    }

    fn empty3(frame: usize) -> DetectionFrame<Box3> {
        DetectionFrame {
            frame,
            boxes: Vec::new(),
        }
    }

    #[test]
    fn perfect_single_object_keeps_one_track() {
        let det2: Vec<DetectionFrame<Box2>> = (0..10)
            .map(|f| frame2(f, &[(10.0 + f as f64, 20.0)]))
            .collect();
        let det3: Vec<DetectionFrame<Box3>> = (0..10).map(empty3).collect();
        let tracked = surrogate_mot(&det2, &det3, &TrackerConfig::default());
        assert_eq!(tracked.len(), 10);
        let ids: std::collections::HashSet<u64> = tracked
            .iter()
            .flat_map(|f| f.boxes.iter().map(|b| b.track_id))
            .collect();
        assert_eq!(ids.len(), 1, "expected a single persistent identity");
        assert!(tracked.iter().all(|f| f.boxes.len() == 1));
    }

    #[test]
    fn identity_survives_single_frame_gap() {
        let mut det2: Vec<DetectionFrame<Box2>> = (0..10)
            .map(|f| frame2(f, &[(10.0 + f as f64, 20.0)]))
            .collect();
        det2[5].boxes.clear();
        let det3: Vec<DetectionFrame<Box3>> = (0..10).map(empty3).collect();
        let tracked = surrogate_mot(&det2, &det3, &TrackerConfig::default());
        let before = tracked[4].boxes[0].track_id;
        assert!(
            tracked[5].boxes.is_empty(),
            "no coasted output during the gap"
        );
        let after = tracked[6].boxes[0].track_id;
        assert_eq!(before, after, "identity must bridge a one-frame gap");
    }

    #[test]
    fn fusion_attaches_range_box() {
        let det2 = vec![frame2(0, &[(10.0, 20.0)])];
        let det3 = vec![DetectionFrame {
            frame: 0,
            boxes: vec![Detection {
                id: None,
                shape: Box3::from_center([10.2, 20.1, 1.5], [8.0, 8.0, 3.0]),
                score: 0.8,
            }],
        }];
        let tracked = surrogate_mot(&det2, &det3, &TrackerConfig::default());
        assert_eq!(tracked[0].boxes.len(), 1);
        assert!(tracked[0].boxes[0].box3.is_some());
    }

    #[test]
    fn output_is_deterministic() {
        let cfg = crate::perception::synth::SequenceConfig::default();
        let seq = crate::perception::synth::generate_synthetic_sequence(&cfg, 3, 4);
        let a = surrogate_mot(&seq.det_2d, &seq.det_3d, &TrackerConfig::default());
        let b = surrogate_mot(&seq.det_2d, &seq.det_3d, &TrackerConfig::default());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn external_tracker_nonzero_exit_reported() {
        let t = ExternalTracker {
            command: vec!["sh".into(), "-c".into(), "exit 3".into()],
        };
        let det2 = vec![frame2(0, &[(10.0, 20.0)])];
        let det3 = vec![empty3(0)];
        match t.track(&det2, &det3) {
            Err(PerceptionError::ExternalTrackerFailure(code)) => assert_eq!(code, 3),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
