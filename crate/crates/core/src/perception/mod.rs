//! Synthetic detection sequences, metric computation, ground-truth-mixing
//! perturbation, a surrogate fusion tracker, and a pluggable external-tracker
//! interface.
//!
//! The world is desk-scale: objects move on a plane, the image-plane channel
//! sees their planar boxes and the range channel sees center/extent volumes
//! over the same footprints. Ground truth is shared; the two detector channels
//! degrade it independently (corner noise, misses, clutter), and quality
//! levels in [0, 1] repair a seeded fraction of each channel's error instances
//! back toward ground truth (1 = ground-truth quality, 0 = untouched).

pub mod dataset;
pub mod geometry;
pub mod metrics;
pub mod perturb;
pub mod synth;
pub mod tracker;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{build_metric_dataset, GridSpec, HarnessConfig};
pub use geometry::{Box2, Box3};
pub use metrics::{compute_metrics, evaluate_tracking, MatchCounts};
pub use perturb::{perturb_detections, perturb_modality, ChannelLevels};
pub use synth::{generate_synthetic_sequence, GroundTruth, SequenceConfig, SyntheticSequence};
pub use tracker::{
    surrogate_mot, ExternalTracker, SurrogateTracker, TrackedBox, TrackedFrame, Tracker,
    TrackerConfig, TrackerInputLine, TrackerOutputLine,
};

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("detection and ground-truth frame lists are misaligned")]
    FrameMisalignment,
    #[error("external tracker exited with status {0}")]
    ExternalTrackerFailure(i32),
    #[error("external tracker protocol error: {0}")]
    TrackerProtocol(String),
    #[error("bad harness config: {0}")]
    BadConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Shapley(#[from] crate::shapley::ShapleyError),
}

/// One detection: optional identity, geometry, confidence in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection<B> {
    pub id: Option<u64>,
    pub shape: B,
    pub score: f64,
}

/// Detections of one frame in one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame<B> {
    pub frame: usize,
    pub boxes: Vec<Detection<B>>,
}

/// Six per-channel quality levels, 1 = ground-truth quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelVector {
    pub acc2d: f64,
    pub fn2d: f64,
    pub fp2d: f64,
    pub acc3d: f64,
    pub fn3d: f64,
    pub fp3d: f64,
}

impl LevelVector {
    pub const CHANNELS: [&'static str; 6] = ["acc2d", "fn2d", "fp2d", "acc3d", "fn3d", "fp3d"];

    pub fn zero() -> Self {
        LevelVector {
            acc2d: 0.0,
            fn2d: 0.0,
            fp2d: 0.0,
            acc3d: 0.0,
            fn3d: 0.0,
            fp3d: 0.0,
        }
    }

    pub fn one() -> Self {
        LevelVector {
            acc2d: 1.0,
            fn2d: 1.0,
            fp2d: 1.0,
            acc3d: 1.0,
            fn3d: 1.0,
            fp3d: 1.0,
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![
            self.acc2d, self.fn2d, self.fp2d, self.acc3d, self.fn3d, self.fp3d,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        if v.len() != 6 {
            return None;
        }
        Some(LevelVector {
            acc2d: v[0],
            fn2d: v[1],
            fp2d: v[2],
            acc3d: v[3],
            fn3d: v[4],
            fp3d: v[5],
        })
    }

    pub fn is_valid(&self) -> bool {
        self.to_vec().iter().all(|z| (0.0..=1.0).contains(z))
    }
}

/// Tracking-quality metrics at a single IoU threshold. `hota` is the
/// single-threshold variant (square root of `det_a * ass_a`), labeled
/// HOTA-lite in emitted artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub fn_rate: f64,
    pub fp_rate: f64,
    pub det_acc_2d: f64,
    pub det_acc_3d: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub loc_a: f64,
    pub hota: f64,
}

impl MetricVector {
    pub const OUTPUTS: [&'static str; 8] = [
        "fn_rate",
        "fp_rate",
        "det_acc_2d",
        "det_acc_3d",
        "det_a",
        "ass_a",
        "loc_a",
        "hota_lite",
    ];

    pub fn to_vec(self) -> Vec<f64> {
        vec![
            self.fn_rate,
            self.fp_rate,
            self.det_acc_2d,
            self.det_acc_3d,
            self.det_a,
            self.ass_a,
            self.loc_a,
            self.hota,
        ]
    }

    pub fn by_name(&self, name: &str) -> Option<f64> {
        let idx = Self::OUTPUTS.iter().position(|o| *o == name)?;
        Some(self.to_vec()[idx])
    }
}
