//! Deterministic synthetic detection sequences.
//!
//! Objects move with constant velocity on a bounded plane, bouncing at the
//! edges. Object visibility is structured so that detector channels own
//! disjoint miss populations: round-robin by object index, a third of the
//! objects is seen by both channels and never missed (anchor objects), a third
//! is image-plane-only (missable there), and a third range-only. Clutter and
//! corner noise are per channel. Ground-truth kinematics depend only on
//! `gt_seed`; detector degradation only on `det_seed`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Box2, Box3};
use super::{Detection, DetectionFrame};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub n_frames: usize,
    pub n_objects: usize,
    /// World extent (width, height) in arbitrary units.
    pub world: (f64, f64),
    /// Per-axis speed range, units per frame.
    pub speed: (f64, f64),
    /// Object box size range (applies to both axes independently).
    pub size: (f64, f64),
    /// Uniform corner noise half-width per channel, absolute units.
    pub noise_2d: f64,
    pub noise_3d: f64,
    /// Miss probability per eligible instance, per channel.
    pub fn_rate_2d: f64,
    pub fn_rate_3d: f64,
    /// Clutter probability per object slot per frame, per channel.
    pub fp_rate_2d: f64,
    pub fp_rate_3d: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            n_frames: 40,
            n_objects: 9,
            world: (100.0, 100.0),
            speed: (0.3, 1.2),
            size: (6.0, 10.0),
            noise_2d: 0.4,
            noise_3d: 0.3,
            fn_rate_2d: 0.25,
            fn_rate_3d: 0.2,
            fp_rate_2d: 0.06,
            fp_rate_3d: 0.05,
        }
    }
}

/// Which channels see an object, and where it may be missed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    /// Both channels, never missed.
    Anchor,
    /// Image-plane channel only; missable there.
    PlaneOnly,
    /// Range channel only; missable there.
    RangeOnly,
}

fn visibility_for(index: usize) -> Visibility {
    match index % 3 {
        0 => Visibility::Anchor,
        1 => Visibility::PlaneOnly,
        _ => Visibility::RangeOnly,
    }
}

/// Per-object, per-frame truth used to build both channels and the tracking
/// reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Object footprints per frame, one entry per visible object, ids set.
    pub tracking_frames: Vec<DetectionFrame<Box2>>,
    /// Image-plane channel truth (anchor + plane-only objects).
    pub frames_2d: Vec<DetectionFrame<Box2>>,
    /// Range channel truth (anchor + range-only objects).
    pub frames_3d: Vec<DetectionFrame<Box3>>,
    pub visibility: Vec<Visibility>,
}

/// A generated sequence: shared truth plus degraded detections per channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSequence {
    pub gt: GroundTruth,
    pub det_2d: Vec<DetectionFrame<Box2>>,
    pub det_3d: Vec<DetectionFrame<Box3>>,
}

struct ObjectState {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    w: f64,
    h: f64,
    depth: f64,
    y_lo: f64,
    y_hi: f64,
}

/// Generate ground truth and degraded detections. Identical `gt_seed` gives
/// identical truth regardless of `det_seed`; detections are bit-reproducible
/// in both.
pub fn generate_synthetic_sequence(
    cfg: &SequenceConfig,
    gt_seed: u64,
    det_seed: u64,
) -> SyntheticSequence {
    assert!(cfg.n_frames >= 1, "need at least one frame");
    let mut gt_rng = ChaCha8Rng::seed_from_u64(gt_seed);
    let (world_w, world_h) = cfg.world;

    // Each object lives in its own lateral band, so distinct objects never
    // overlap and every miss or clutter effect is attributable to exactly one
    // detector channel.
    let band = world_h / cfg.n_objects as f64;
    let mut objects: Vec<ObjectState> = (0..cfg.n_objects)
        .map(|i| {
            let w = gt_rng.random_range(cfg.size.0..=cfg.size.1);
            let h_cap = (band - 1.0).max(1.0).min(cfg.size.1);
            let h = gt_rng.random_range(cfg.size.0.min(h_cap)..=h_cap);
            let speed = gt_rng.random_range(cfg.speed.0..=cfg.speed.1);
            let heading = gt_rng.random_range(0.0..std::f64::consts::TAU);
            let y_lo = i as f64 * band + 0.5 * h;
            let y_hi = (i as f64 + 1.0) * band - 0.5 * h;
            ObjectState {
                x: gt_rng.random_range(w..world_w - w),
                y: gt_rng.random_range(y_lo..=y_hi.max(y_lo + 1e-9)),
                vx: speed * heading.cos(),
                vy: speed * heading.sin(),
                w,
                h,
                depth: gt_rng.random_range(2.0..4.0),
                y_lo,
                y_hi,
            }
        })
        .collect();
    let visibility: Vec<Visibility> = (0..cfg.n_objects).map(visibility_for).collect();

    let mut tracking_frames = Vec::with_capacity(cfg.n_frames);
    let mut frames_2d = Vec::with_capacity(cfg.n_frames);
    let mut frames_3d = Vec::with_capacity(cfg.n_frames);
    for frame in 0..cfg.n_frames {
        let mut track_boxes = Vec::new();
        let mut boxes_2d = Vec::new();
        let mut boxes_3d = Vec::new();
        for (i, obj) in objects.iter_mut().enumerate() {
            if frame > 0 {
                obj.x += obj.vx;
                obj.y += obj.vy;
                if obj.x < obj.w * 0.5 || obj.x > world_w - obj.w * 0.5 {
                    obj.vx = -obj.vx;
                    obj.x = obj.x.clamp(obj.w * 0.5, world_w - obj.w * 0.5);
                }
                if obj.y < obj.y_lo || obj.y > obj.y_hi {
                    obj.vy = -obj.vy;
                    obj.y = obj.y.clamp(obj.y_lo, obj.y_hi);
                }
            }
            let footprint = Box2::from_center(obj.x, obj.y, obj.w, obj.h);
            track_boxes.push(Detection {
                id: Some(i as u64),
                shape: footprint,
                score: 1.0,
            });
            match visibility[i] {
                Visibility::Anchor => {
                    boxes_2d.push(Detection {
                        id: Some(i as u64),
                        shape: footprint,
                        score: 1.0,
                    });
                    boxes_3d.push(Detection {
                        id: Some(i as u64),
                        shape: Box3::from_center(
                            [obj.x, obj.y, obj.depth * 0.5],
                            [obj.w, obj.h, obj.depth],
                        ),
                        score: 1.0,
                    });
                }
                Visibility::PlaneOnly => boxes_2d.push(Detection {
                    id: Some(i as u64),
                    shape: footprint,
                    score: 1.0,
                }),
                Visibility::RangeOnly => boxes_3d.push(Detection {
                    id: Some(i as u64),
                    shape: Box3::from_center(
                        [obj.x, obj.y, obj.depth * 0.5],
                        [obj.w, obj.h, obj.depth],
                    ),
                    score: 1.0,
                }),
            }
        }
        tracking_frames.push(DetectionFrame {
            frame,
            boxes: track_boxes,
        });
        frames_2d.push(DetectionFrame {
            frame,
            boxes: boxes_2d,
        });
        frames_3d.push(DetectionFrame {
            frame,
            boxes: boxes_3d,
        });
    }

    // Detector degradation.
    let mut det_rng = ChaCha8Rng::seed_from_u64(det_seed);
    let mut det_2d = Vec::with_capacity(cfg.n_frames);
    let mut det_3d = Vec::with_capacity(cfg.n_frames);
    for frame in 0..cfg.n_frames {
        let mut boxes = Vec::new();
        for det in &frames_2d[frame].boxes {
            let missable = det
                .id
                .map(|id| visibility[id as usize] == Visibility::PlaneOnly)
                .unwrap_or(false);
            if missable && det_rng.random_range(0.0..1.0) < cfg.fn_rate_2d {
                continue;
            }
            let n = cfg.noise_2d;
            let shape = Box2 {
                x1: det.shape.x1 + det_rng.random_range(-n..=n),
                y1: det.shape.y1 + det_rng.random_range(-n..=n),
                x2: det.shape.x2 + det_rng.random_range(-n..=n),
                y2: det.shape.y2 + det_rng.random_range(-n..=n),
            };
            boxes.push(Detection {
                id: None,
                shape,
                score: det_rng.random_range(0.5..1.0),
            });
        }
        for _ in 0..cfg.n_objects {
            if det_rng.random_range(0.0..1.0) < cfg.fp_rate_2d {
                let w = det_rng.random_range(cfg.size.0..=cfg.size.1);
                let h = det_rng.random_range(cfg.size.0..=cfg.size.1);
                let cx = det_rng.random_range(w..world_w - w);
                let cy = det_rng.random_range(h..world_h - h);
                boxes.push(Detection {
                    id: None,
                    shape: Box2::from_center(cx, cy, w, h),
                    score: det_rng.random_range(0.5..1.0),
                });
            }
        }
        det_2d.push(DetectionFrame { frame, boxes });

        let mut boxes = Vec::new();
        for det in &frames_3d[frame].boxes {
            let missable = det
                .id
                .map(|id| visibility[id as usize] == Visibility::RangeOnly)
                .unwrap_or(false);
            if missable && det_rng.random_range(0.0..1.0) < cfg.fn_rate_3d {
                continue;
            }
            let n = cfg.noise_3d;
            let mut shape = det.shape;
            for k in 0..3 {
                shape.min[k] += det_rng.random_range(-n..=n);
                shape.max[k] += det_rng.random_range(-n..=n);
                if shape.max[k] <= shape.min[k] {
                    let mid = 0.5 * (shape.min[k] + shape.max[k]);
                    shape.min[k] = mid - 0.05;
                    shape.max[k] = mid + 0.05;
                }
            }
            boxes.push(Detection {
                id: None,
                shape,
                score: det_rng.random_range(0.5..1.0),
            });
        }
        for _ in 0..cfg.n_objects {
            if det_rng.random_range(0.0..1.0) < cfg.fp_rate_3d {
                let w = det_rng.random_range(cfg.size.0..=cfg.size.1);
                let h = det_rng.random_range(cfg.size.0..=cfg.size.1);
                let cx = det_rng.random_range(w..world_w - w);
                let cy = det_rng.random_range(h..world_h - h);
                boxes.push(Detection {
                    id: None,
                    shape: Box3::from_center([cx, cy, 1.5], [w, h, 3.0]),
                    score: det_rng.random_range(0.5..1.0),
                });
            }
        }
        det_3d.push(DetectionFrame { frame, boxes });
    }

    SyntheticSequence {
        gt: GroundTruth {
            tracking_frames,
            frames_2d,
            frames_3d,
            visibility,
        },
        det_2d,
        det_3d,
    }
}
