//! Ground-truth-mixing perturbation: quality level `z` on a channel repairs a
//! `z`-fraction of that channel's error instances relative to ground truth.
//!
//! Error instances are computed per modality by greedy IoU matching of the
//! degraded detections against the channel truth: unmatched truth boxes are
//! misses (the FN channel restores a seeded selection of them), unmatched
//! detections are clutter (the FP channel deletes a seeded selection), and
//! matched detections carry corner error (the accuracy channel blends every
//! matched box toward its truth by the level). `z = 1` reproduces ground truth
//! on the channel; `z = 0` leaves the detections untouched.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::geometry::{Box2, Box3};
use super::synth::{GroundTruth, SyntheticSequence};
use super::{Detection, DetectionFrame, LevelVector, PerceptionError};
use crate::numeric::derive_seed;

/// Perturbed detections for both modalities.
pub type PerturbedPair = (Vec<DetectionFrame<Box2>>, Vec<DetectionFrame<Box3>>);

/// Quality levels for one modality.
#[derive(Debug, Clone, Copy)]
pub struct ChannelLevels {
    pub acc: f64,
    pub fnr: f64,
    pub fpr: f64,
}

/// Geometry operations the perturbation needs from a box type.
pub trait PerturbGeom: Copy {
    fn iou_with(&self, other: &Self) -> f64;
    fn blend(&self, truth: &Self, frac: f64) -> Self;
}

impl PerturbGeom for Box2 {
    fn iou_with(&self, other: &Self) -> f64 {
        self.iou(other)
    }
    fn blend(&self, truth: &Self, frac: f64) -> Self {
        self.blend_toward(truth, frac)
    }
}

impl PerturbGeom for Box3 {
    fn iou_with(&self, other: &Self) -> f64 {
        self.iou(other)
    }
    fn blend(&self, truth: &Self, frac: f64) -> Self {
        self.blend_toward(truth, frac)
    }
}

/// Greedy descending-IoU bipartite matching above a threshold. Ties break by
/// (gt index, det index) so the result is deterministic.
pub fn greedy_match<B: PerturbGeom>(
    gt: &[Detection<B>],
    det: &[Detection<B>],
    tau: f64,
) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (di, d) in det.iter().enumerate() {
            let iou = g.shape.iou_with(&d.shape);
            if iou >= tau {
                pairs.push((gi, di, iou));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut gt_used = vec![false; gt.len()];
    let mut det_used = vec![false; det.len()];
    let mut matched = Vec::new();
    for (gi, di, iou) in pairs {
        if gt_used[gi] || det_used[di] {
            continue;
        }
        gt_used[gi] = true;
        det_used[di] = true;
        matched.push((gi, di, iou));
    }
    matched
}

fn round_count(frac: f64, n: usize) -> usize {
    ((frac * n as f64).round() as usize).min(n)
}

/// Perturb one modality toward ground truth. Misses are restored and clutter
/// deleted by seeded whole-sequence selection, so a level of 0.5 over ten
/// misses restores exactly five.
pub fn perturb_modality<B: PerturbGeom>(
    det: &[DetectionFrame<B>],
    gt: &[DetectionFrame<B>],
    levels: ChannelLevels,
    tau_iou: f64,
    seed: u64,
) -> Result<Vec<DetectionFrame<B>>, PerceptionError> {
    if det.len() != gt.len() || det.iter().zip(gt).any(|(d, g)| d.frame != g.frame) {
        return Err(PerceptionError::FrameMisalignment);
    }

    // Classify error instances across the whole sequence.
    let mut misses: Vec<(usize, usize)> = Vec::new(); // (frame idx, gt idx)
    let mut clutter: Vec<(usize, usize)> = Vec::new(); // (frame idx, det idx)
    let mut matches: Vec<Vec<(usize, usize)>> = vec![Vec::new(); det.len()]; // per frame (gt, det)
    for (fi, (dframe, gframe)) in det.iter().zip(gt).enumerate() {
        let matched = greedy_match(&gframe.boxes, &dframe.boxes, tau_iou);
        let mut gt_hit = vec![false; gframe.boxes.len()];
        let mut det_hit = vec![false; dframe.boxes.len()];
        for (gi, di, _) in &matched {
            gt_hit[*gi] = true;
            det_hit[*di] = true;
            matches[fi].push((*gi, *di));
        }
        misses.extend(
            gt_hit
                .iter()
                .enumerate()
                .filter(|(_, h)| !**h)
                .map(|(gi, _)| (fi, gi)),
        );
        clutter.extend(
            det_hit
                .iter()
                .enumerate()
                .filter(|(_, h)| !**h)
                .map(|(di, _)| (fi, di)),
        );
    }

    let mut restore_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    misses.shuffle(&mut restore_rng);
    let restored: std::collections::HashSet<(usize, usize)> = misses
        .iter()
        .take(round_count(levels.fnr, misses.len()))
        .copied()
        .collect();

    let mut delete_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    clutter.shuffle(&mut delete_rng);
    let deleted: std::collections::HashSet<(usize, usize)> = clutter
        .iter()
        .take(round_count(levels.fpr, clutter.len()))
        .copied()
        .collect();

    let mut out = Vec::with_capacity(det.len());
    for (fi, (dframe, gframe)) in det.iter().zip(gt).enumerate() {
        let gt_for_det: std::collections::HashMap<usize, usize> =
            matches[fi].iter().map(|(gi, di)| (*di, *gi)).collect();
        let mut boxes = Vec::with_capacity(dframe.boxes.len());
        for (di, d) in dframe.boxes.iter().enumerate() {
            if deleted.contains(&(fi, di)) {
                continue;
            }
            let shape = match gt_for_det.get(&di) {
                Some(&gi) if levels.acc > 0.0 => d.shape.blend(&gframe.boxes[gi].shape, levels.acc),
                _ => d.shape,
            };
            boxes.push(Detection { shape, ..*d });
        }
        for (gi, g) in gframe.boxes.iter().enumerate() {
            if restored.contains(&(fi, gi)) {
                boxes.push(Detection {
                    id: None,
                    shape: g.shape,
                    score: 1.0,
                });
            }
        }
        out.push(DetectionFrame {
            frame: dframe.frame,
            boxes,
        });
    }
    Ok(out)
}

/// Apply a six-channel [`LevelVector`] to both modalities of a sequence.
/// Sub-seeds for the two modalities are derived from `seed`.
pub fn perturb_detections(
    det_2d: &[DetectionFrame<Box2>],
    det_3d: &[DetectionFrame<Box3>],
    gt: &GroundTruth,
    level: &LevelVector,
    tau_iou: f64,
    seed: u64,
) -> Result<PerturbedPair, PerceptionError> {
    let p2 = perturb_modality(
        det_2d,
        &gt.frames_2d,
        ChannelLevels {
            acc: level.acc2d,
            fnr: level.fn2d,
            fpr: level.fp2d,
        },
        tau_iou,
        derive_seed(seed, 101),
    )?;
    let p3 = perturb_modality(
        det_3d,
        &gt.frames_3d,
        ChannelLevels {
            acc: level.acc3d,
            fnr: level.fn3d,
            fpr: level.fp3d,
        },
        tau_iou,
        derive_seed(seed, 202),
    )?;
    Ok((p2, p3))
}

/// Convenience: perturb a whole synthetic sequence.
pub fn perturb_sequence(
    seq: &SyntheticSequence,
    level: &LevelVector,
    tau_iou: f64,
    seed: u64,
) -> Result<PerturbedPair, PerceptionError> {
    perturb_detections(&seq.det_2d, &seq.det_3d, &seq.gt, level, tau_iou, seed)
}
