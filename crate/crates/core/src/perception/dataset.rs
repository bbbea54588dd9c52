//! Perturbation-level metric dataset: sweep quality levels, run the tracker,
//! and collect output metrics into a [`PerturbationDataset`] for attribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate_tracking;
use super::perturb::perturb_detections;
use super::synth::{generate_synthetic_sequence, SequenceConfig, SyntheticSequence};
use super::tracker::Tracker;
use super::{LevelVector, MetricVector, PerceptionError};
use crate::numeric::derive_seed;
use crate::shapley::PerturbationDataset;

/// Harness configuration: sequence generation plus evaluation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub sequence: SequenceConfig,
    pub gt_seed: u64,
    pub det_seed: u64,
    /// Matching threshold used for perturbation bookkeeping and metrics.
    pub tau_iou: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            sequence: SequenceConfig::default(),
            gt_seed: 17,
            det_seed: 18,
            tau_iou: 0.5,
        }
    }
}

impl HarnessConfig {
    pub fn generate(&self) -> SyntheticSequence {
        generate_synthetic_sequence(&self.sequence, self.gt_seed, self.det_seed)
    }
}

/// Level-vector grids for dataset construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GridSpec {
    /// Sweep each channel alone over `steps` evenly spaced levels in [0, 1]
    /// (others at 0), plus the all-equal diagonal. This gives clean marginal
    /// slopes and some joint variation.
    PerChannelWithDiagonal { steps: usize },
    /// Explicit list.
    Explicit(Vec<LevelVector>),
}

impl GridSpec {
    pub fn levels(&self) -> Result<Vec<LevelVector>, PerceptionError> {
        match self {
            GridSpec::PerChannelWithDiagonal { steps } => {
                if *steps < 2 {
                    return Err(PerceptionError::BadConfig(
                        "grid needs at least 2 steps".into(),
                    ));
                }
                let mut out = Vec::new();
                for c in 0..6 {
                    for k in 0..*steps {
                        let z = k as f64 / (*steps - 1) as f64;
                        let mut v = [0.0f64; 6];
                        v[c] = z;
                        out.push(LevelVector::from_slice(&v).unwrap());
                    }
                }
                for k in 0..*steps {
                    let z = k as f64 / (*steps - 1) as f64;
                    out.push(LevelVector::from_slice(&[z; 6]).unwrap());
                }
                Ok(out)
            }
            GridSpec::Explicit(levels) => {
                if levels.is_empty() {
                    return Err(PerceptionError::BadConfig("empty explicit grid".into()));
                }
                Ok(levels.clone())
            }
        }
    }
}

/// Run the grid: perturb, track, evaluate; one dataset row per level vector.
///
/// Rows run in parallel with per-row seeds derived from `global_seed`;
/// the dataset deduplicates on the level vector and records min-max
/// normalization constants per output column.
pub fn build_metric_dataset(
    harness: &HarnessConfig,
    grid: &GridSpec,
    tracker: &(dyn Tracker + Sync),
    global_seed: u64,
) -> Result<PerturbationDataset, PerceptionError> {
    let levels = grid.levels()?;
    for lv in &levels {
        if !lv.is_valid() {
            return Err(PerceptionError::BadConfig(
                "levels must lie in [0,1]".into(),
            ));
        }
    }
    let seq = harness.generate();
    type RawRow = (Vec<f64>, Vec<f64>);
    let rows: Vec<Result<RawRow, PerceptionError>> = levels
        .par_iter()
        .enumerate()
        .map(|(i, lv)| {
            let seed = derive_seed(global_seed, i as u64);
            let (p2, p3) =
                perturb_detections(&seq.det_2d, &seq.det_3d, &seq.gt, lv, harness.tau_iou, seed)?;
            let tracked = tracker.track(&p2, &p3)?;
            let (metrics, _) = evaluate_tracking(&tracked, &seq.gt, harness.tau_iou);
            Ok((lv.to_vec(), metrics.to_vec()))
        })
        .collect();
    let mut raw = Vec::with_capacity(rows.len());
    for r in rows {
        raw.push(r?);
    }
    Ok(PerturbationDataset::from_raw(
        LevelVector::CHANNELS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        MetricVector::OUTPUTS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        raw,
    )?)
}
