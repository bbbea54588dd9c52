//! Constrained allocation of perception budgets.
//!
//! Two problems are solved here. Partition allocation distributes an
//! equivalent risk budget over distance partitions: minimize the test-mileage
//! cost `sum ln(1-C)/ln(1-p_i)` subject to `p . E <= lambda'` with `p`
//! non-decreasing across partitions. Component allocation distributes quality
//! levels over detector channels: minimize the development cost
//! `sum 1/(1-z_i)` subject to the fitted linear constraint
//! `z . phi + phi0 <= requirement` on the box `[0, 1-eps]^M`.
//!
//! Both problems are convex on their domains (the mileage cost per coordinate
//! is convex for p below 1to the convexity knee at 1 - e^-2), so instead of an
//! iterative descent the solvers walk the KKT conditions directly: a scalar
//! dual multiplier is bisected until the budget constraint is tight, with the
//! per-coordinate stationarity equation solved in closed form or by inner
//! bisection, and pool-adjacent-violators handles the monotonicity cone.
//! Optima are therefore deterministic and accurate to solver tolerance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::derive_seed;
use crate::perception::{
    evaluate_tracking, perturb_detections, HarnessConfig, LevelVector, MatchCounts, MetricVector,
    Tracker,
};

#[derive(Debug, Error)]
pub enum AllocationError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("every partition has zero relevance probability; the budget does not constrain")]
    UnconstrainedBudget,
    #[error("infeasible: minimum achievable constraint value {min_achievable:.6e} exceeds the requirement")]
    Infeasible { min_achievable: f64 },
    #[error(transparent)]
    Perception(#[from] crate::perception::PerceptionError),
}

/// Test mileage implied by a failure-rate allocation at confidence `c`:
/// `sum ln(1-c)/ln(1-p_i)`, every term positive.
pub fn mileage_cost(p: &[f64], c: f64) -> Result<f64, AllocationError> {
    if !(c > 0.0 && c < 1.0) {
        return Err(AllocationError::DomainError(format!(
            "confidence {c} outside (0,1)"
        )));
    }
    let mut total = 0.0;
    for &pi in p {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(AllocationError::DomainError(format!(
                "rate {pi} outside (0,1)"
            )));
        }
        total += (1.0 - c).ln() / (1.0 - pi).ln();
    }
    Ok(total)
}

/// Box bounds for the partition rates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PartitionBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for PartitionBounds {
    fn default() -> Self {
        PartitionBounds { lo: 1e-15, hi: 0.5 }
    }
}

/// Result of the partition-rate allocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionAllocation {
    /// Allocated failure rate per partition, non-decreasing.
    pub p: Vec<f64>,
    pub cost: f64,
    /// Budget actually consumed, `p . E`.
    pub lambda_used: f64,
    pub feasible: bool,
}

// Convexity knee of the per-coordinate mileage cost: beyond p = 1 - e^-2 the
// term turns concave, so the stationarity solve stays left of it.
const CONVEX_KNEE: f64 = 0.864_664_716_763_387_3;

/// Magnitude of d/dp [1/(-ln(1-p))] up to the positive constant -ln(1-C):
/// the stationarity equation is `grad(p) = mu * e_mean` per block.
fn cost_grad_unit(p: f64) -> f64 {
    let u = -(1.0 - p).ln();
    1.0 / ((1.0 - p) * u * u)
}

/// Solve `cost_grad_unit(p) = target` on the convex branch, clamped to bounds.
fn stationary_rate(target: f64, bounds: &PartitionBounds, hi_eff: f64) -> f64 {
    if target <= cost_grad_unit(hi_eff) {
        return hi_eff;
    }
    let mut lo = bounds.lo.min(hi_eff * 0.5);
    // cost_grad_unit decreases on (0, knee); expand lo downward if needed.
    while cost_grad_unit(lo) < target && lo > 1e-300 {
        lo *= 0.5;
    }
    let (mut a, mut b) = (lo, hi_eff);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if cost_grad_unit(mid) > target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= f64::EPSILON * b {
            break;
        }
    }
    (0.5 * (a + b)).clamp(bounds.lo, hi_eff)
}

/// Rates for every partition at multiplier `mu`, honoring monotonicity by
/// pooling adjacent violators (pooled blocks share one rate driven by the
/// block's mean relevance probability).
fn rates_at_mu(
    e: &[f64],
    mu: f64,
    c_scale: f64,
    bounds: &PartitionBounds,
    hi_eff: f64,
) -> Vec<f64> {
    // Blocks of (count, sum_e, rate).
    let mut blocks: Vec<(usize, f64, f64)> = Vec::new();
    let rate_for = |sum_e: f64, n: usize| -> f64 {
        let mean_e = sum_e / n as f64;
        if mean_e <= 0.0 {
            hi_eff
        } else {
            stationary_rate(mu * mean_e / c_scale, bounds, hi_eff)
        }
    };
    for &ei in e {
        let mut n = 1usize;
        let mut sum = ei;
        let mut rate = rate_for(sum, n);
        while let Some(&(pn, psum, prate)) = blocks.last() {
            if rate >= prate {
                break;
            }
            blocks.pop();
            n += pn;
            sum += psum;
            rate = rate_for(sum, n);
        }
        blocks.push((n, sum, rate));
    }
    let mut out = Vec::with_capacity(e.len());
    for (n, _, rate) in blocks {
        out.extend(std::iter::repeat_n(rate, n));
    }
    out
}

/// Allocate per-partition failure-rate budgets under the mileage cost.
///
/// The budget constraint is active at the optimum whenever any probability is
/// positive (the cost strictly falls as any rate rises), so the dual
/// multiplier is bisected until `p . E` matches `lambda_prime`; rates clamped
/// at the upper bound leave the remaining budget to the others.
pub fn allocate_partition_requirements(
    e: &[f64],
    lambda_prime: f64,
    confidence: f64,
    bounds: &PartitionBounds,
) -> Result<PartitionAllocation, AllocationError> {
    if e.is_empty() {
        return Err(AllocationError::DomainError(
            "empty probability vector".into(),
        ));
    }
    if e.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(AllocationError::DomainError(
            "relevance probabilities must be finite and >= 0".into(),
        ));
    }
    if !lambda_prime.is_finite() || lambda_prime <= 0.0 {
        return Err(AllocationError::DomainError(format!(
            "lambda' {lambda_prime} must be positive"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AllocationError::DomainError(format!(
            "confidence {confidence} outside (0,1)"
        )));
    }
    if !(bounds.lo > 0.0 && bounds.lo < bounds.hi && bounds.hi < 1.0) {
        return Err(AllocationError::DomainError("need 0 < lo < hi < 1".into()));
    }
    if e.iter().all(|x| *x == 0.0) {
        return Err(AllocationError::UnconstrainedBudget);
    }

    let hi_eff = bounds.hi.min(CONVEX_KNEE - 1e-9);
    let c_scale = -(1.0 - confidence).ln(); // positive; divides out of the argmin
    let budget = |p: &[f64]| p.iter().zip(e).map(|(pi, ei)| pi * ei).sum::<f64>();

    // At mu -> 0 every rate sits at the top of the box.
    let p_top = rates_at_mu(e, 0.0, c_scale, bounds, hi_eff);
    let top_budget = budget(&p_top);
    if top_budget <= lambda_prime {
        let cost = mileage_cost(&p_top, confidence)?;
        return Ok(PartitionAllocation {
            lambda_used: top_budget,
            cost,
            p: p_top,
            feasible: true,
        });
    }

    // Bracket the multiplier: budget(mu) decreases in mu.
    let mut mu_lo = 1.0;
    while budget(&rates_at_mu(e, mu_lo, c_scale, bounds, hi_eff)) < lambda_prime {
        mu_lo /= 16.0;
        if mu_lo < 1e-290 {
            break;
        }
    }
    let mut mu_hi = mu_lo.max(1.0);
    loop {
        let b = budget(&rates_at_mu(e, mu_hi, c_scale, bounds, hi_eff));
        if b <= lambda_prime {
            break;
        }
        mu_hi *= 16.0;
        if mu_hi > 1e290 {
            return Err(AllocationError::Infeasible {
                min_achievable: budget(&rates_at_mu(e, mu_hi, c_scale, bounds, hi_eff)),
            });
        }
    }

    for _ in 0..200 {
        let mu = 0.5 * (mu_lo + mu_hi);
        let b = budget(&rates_at_mu(e, mu, c_scale, bounds, hi_eff));
        if b > lambda_prime {
            mu_lo = mu;
        } else {
            mu_hi = mu;
        }
        if (mu_hi - mu_lo) <= f64::EPSILON * mu_hi {
            break;
        }
    }
    let p = rates_at_mu(e, mu_hi, c_scale, bounds, hi_eff);
    let lambda_used = budget(&p);
    let cost = mileage_cost(&p, confidence)?;
    Ok(PartitionAllocation {
        p,
        cost,
        lambda_used,
        feasible: lambda_used <= lambda_prime * (1.0 + 1e-9),
    })
}

/// Result of the component-level quality allocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentAllocation {
    /// Quality level per channel in [0, 1-eps].
    pub z: Vec<f64>,
    /// Development cost `sum 1/(1-z_i)`.
    pub cost: f64,
    /// `z . phi + phi0`.
    pub constraint_value: f64,
    pub feasible: bool,
    /// Upper box bound used to keep the cost finite.
    pub epsilon: f64,
}

/// Development cost of a level vector.
pub fn development_cost(z: &[f64]) -> f64 {
    z.iter().map(|zi| 1.0 / (1.0 - zi)).sum()
}

/// Allocate component quality levels against a fitted linear constraint.
///
/// Channels with non-negative attribution stay at zero (raising them only
/// raises cost and constraint); negative-attribution channels follow the KKT
/// stationarity `1/(1-z_i)^2 = nu * |phi_i|`, with the multiplier bisected
/// until the constraint is tight. `z = 0` is returned outright when the
/// baseline already meets the requirement.
pub fn allocate_component_requirements(
    phi0: f64,
    phi: &[f64],
    requirement: f64,
    epsilon: f64,
) -> Result<ComponentAllocation, AllocationError> {
    if phi.is_empty() {
        return Err(AllocationError::DomainError(
            "empty attribution vector".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(AllocationError::DomainError(format!(
            "epsilon {epsilon} outside (0,1)"
        )));
    }
    let z_hi = 1.0 - epsilon;
    let m = phi.len();

    let min_achievable = phi0 + phi.iter().map(|p| p.min(0.0) * z_hi).sum::<f64>();
    if min_achievable > requirement {
        return Err(AllocationError::Infeasible { min_achievable });
    }
    if phi0 <= requirement {
        return Ok(ComponentAllocation {
            z: vec![0.0; m],
            cost: m as f64,
            constraint_value: phi0,
            feasible: true,
            epsilon,
        });
    }

    // Need sum(phi_i z_i) = b < 0; only negative-phi channels can deliver it.
    let b = requirement - phi0;
    let z_at = |nu: f64| -> Vec<f64> {
        phi.iter()
            .map(|&p| {
                if p >= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (nu * (-p)).sqrt()).clamp(0.0, z_hi)
                }
            })
            .collect()
    };
    let delivered = |z: &[f64]| z.iter().zip(phi).map(|(zi, p)| zi * p).sum::<f64>();

    let mut nu_lo = 1.0;
    while delivered(&z_at(nu_lo)) < b {
        // Delivered falls below target (too negative): shrink nu.
        nu_lo /= 16.0;
        if nu_lo < 1e-290 {
            break;
        }
    }
    let mut nu_hi = nu_lo.max(1.0);
    while delivered(&z_at(nu_hi)) > b {
        nu_hi *= 16.0;
        if nu_hi > 1e300 {
            break; // all deliverers clamped at z_hi; feasibility already checked
        }
    }
    let mut nu = nu_hi;
    for _ in 0..200 {
        let mid = 0.5 * (nu_lo + nu_hi);
        if delivered(&z_at(mid)) > b {
            nu_lo = mid;
        } else {
            nu_hi = mid;
        }
        nu = nu_hi;
        if (nu_hi - nu_lo) <= f64::EPSILON * nu_hi {
            break;
        }
    }
    let z = z_at(nu);
    let constraint_value = phi0 + delivered(&z);
    Ok(ComponentAllocation {
        cost: development_cost(&z),
        constraint_value,
        feasible: constraint_value <= requirement * (1.0 + 1e-9) + 1e-15,
        z,
        epsilon,
    })
}

/// Normalized performance summary entry: output metrics at ground-truth-input
/// quality map to 100 %, at original-input quality to 50 %.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerformanceEntry {
    pub metric: String,
    pub percent: f64,
}

/// Outcome of the end-to-end verification runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub runs: usize,
    pub per_run: Vec<MetricVector>,
    /// Runs whose own miss-frame rate exceeded the requirement.
    pub violation_count: usize,
    /// Pooled miss-frame rate over all runs.
    pub pooled_fn_frame_rate: f64,
    pub requirement: f64,
    pub pass: bool,
    /// Normalized summary over the mean run metrics.
    pub summary: Vec<PerformanceEntry>,
}

fn normalized_percent(value: f64, orig: f64, gt: f64) -> f64 {
    if (gt - orig).abs() < 1e-15 {
        100.0
    } else {
        50.0 + 50.0 * (value - orig) / (gt - orig)
    }
}

/// Build the normalized summary from mean run metrics against the original
/// and ground-truth-input references.
pub fn performance_summary(
    mean: &MetricVector,
    orig: &MetricVector,
    gt: &MetricVector,
) -> Vec<PerformanceEntry> {
    MetricVector::OUTPUTS
        .iter()
        .zip(
            mean.to_vec()
                .iter()
                .zip(orig.to_vec().iter().zip(gt.to_vec())),
        )
        .map(|(name, (m, (o, g)))| PerformanceEntry {
            metric: name.to_string(),
            percent: normalized_percent(*m, *o, g),
        })
        .collect()
}

/// Verify an allocation empirically: for each run, sample quality levels at or
/// above the allocated ones, perturb the harness sequence, track, and score.
/// Pass means the pooled miss-frame rate stays within the requirement.
pub fn verify_allocation(
    alloc: &ComponentAllocation,
    harness: &HarnessConfig,
    tracker: &(dyn Tracker + Sync),
    requirement: f64,
    runs: usize,
    seed: u64,
) -> Result<VerificationReport, AllocationError> {
    if runs == 0 {
        return Err(AllocationError::DomainError("need at least one run".into()));
    }
    let seq = harness.generate();
    let alloc_level = LevelVector::from_slice(&alloc.z)
        .ok_or_else(|| AllocationError::DomainError("allocation must carry 6 channels".into()))?;

    // Reference points for the normalized summary.
    let orig_tracks = tracker.track(&seq.det_2d, &seq.det_3d)?;
    let (orig_metrics, _) = evaluate_tracking(&orig_tracks, &seq.gt, harness.tau_iou);
    let gt_tracks = tracker.track(&seq.gt.frames_2d, &seq.gt.frames_3d)?;
    let (gt_metrics, _) = evaluate_tracking(&gt_tracks, &seq.gt, harness.tau_iou);

    let outcomes: Vec<Result<(MetricVector, MatchCounts), AllocationError>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let z: Vec<f64> = alloc
                .z
                .iter()
                .map(|&zi| zi + rng.random_range(0.0..=1.0) * (1.0 - zi))
                .collect();
            let level = LevelVector::from_slice(&z).unwrap();
            let (p2, p3) = perturb_detections(
                &seq.det_2d,
                &seq.det_3d,
                &seq.gt,
                &level,
                harness.tau_iou,
                derive_seed(seed, (runs + r) as u64),
            )?;
            let tracked = tracker.track(&p2, &p3)?;
            Ok(evaluate_tracking(&tracked, &seq.gt, harness.tau_iou))
        })
        .collect();

    let mut per_run = Vec::with_capacity(runs);
    let mut violation_count = 0usize;
    let mut fn_frames = 0usize;
    let mut n_frames = 0usize;
    let mut mean = vec![0.0f64; MetricVector::OUTPUTS.len()];
    for outcome in outcomes {
        let (metrics, counts) = outcome?;
        if counts.fn_frame_rate() > requirement {
            violation_count += 1;
        }
        fn_frames += counts.fn_frames;
        n_frames += counts.n_frames;
        for (acc, v) in mean.iter_mut().zip(metrics.to_vec()) {
            *acc += v;
        }
        per_run.push(metrics);
    }
    for acc in &mut mean {
        *acc /= runs as f64;
    }
    let mean_metrics = MetricVector {
        fn_rate: mean[0],
        fp_rate: mean[1],
        det_acc_2d: mean[2],
        det_acc_3d: mean[3],
        det_a: mean[4],
        ass_a: mean[5],
        loc_a: mean[6],
        hota: mean[7],
    };
    let pooled = if n_frames == 0 {
        0.0
    } else {
        fn_frames as f64 / n_frames as f64
    };
    let _ = alloc_level;

    Ok(VerificationReport {
        runs,
        violation_count,
        pooled_fn_frame_rate: pooled,
        requirement,
        pass: pooled <= requirement,
        summary: performance_summary(&mean_metrics, &orig_metrics, &gt_metrics),
        per_run,
    })
}
