//! Distance-partitioned relevant-scenario probabilities under false-negative
//! injection, and the equivalent-risk identity feeding the allocator.
//!
//! A following scenario is replayed with the rear vehicle blind to the front
//! object for the first `duration` seconds (cruising on its recorded speed),
//! then perceiving truthfully under the RSS policy. Scenarios that end in a
//! collision are relevant; each is binned by its bumper gap at scenario onset
//! into fixed-width distance partitions `A_i = [i*width, (i+1)*width)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{
    simulate_policy_with_presence, BehaviorError, BehaviorModel, ModelParamSet, ReplayScenario,
    RssParams,
};
use crate::scenario::FollowingScenario;
use crate::trajectory::TrackSet;

#[derive(Debug, Error, PartialEq)]
pub enum BayesError {
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("no scenarios to evaluate")]
    EmptyInput,
    #[error("probability {0} outside (0, 1]")]
    ZeroProbability(f64),
    #[error("bad partition scheme: need at least one partition of positive width")]
    BadScheme,
}

/// Fixed-width distance partitions starting at 0 m.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionScheme {
    pub n_partitions: usize,
    pub width: f64,
}

impl Default for PartitionScheme {
    fn default() -> Self {
        PartitionScheme {
            n_partitions: 8,
            width: 25.0,
        }
    }
}

impl PartitionScheme {
    pub fn validate(&self) -> Result<(), BayesError> {
        if self.n_partitions == 0 || !self.width.is_finite() || self.width <= 0.0 {
            return Err(BayesError::BadScheme);
        }
        Ok(())
    }

    /// Partition index containing `distance`, if within range.
    pub fn index_of(&self, distance: f64) -> Option<usize> {
        if distance < 0.0 {
            return None;
        }
        let i = (distance / self.width).floor() as usize;
        (i < self.n_partitions).then_some(i)
    }

    /// Lower bound of partition `i` in meters.
    pub fn lower_bound(&self, i: usize) -> f64 {
        i as f64 * self.width
    }
}

/// System-level risk acceptance mapped to the equivalent perception budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiskBudget {
    /// Acceptable hazard rate, events/h.
    pub lambda: f64,
    /// Probability the hazardous event is uncontrollable.
    pub p_c_given_e: f64,
    /// Probability of the reference severity given loss of control.
    pub p_s_given_c: f64,
    /// `lambda / (p_c_given_e * p_s_given_c)`.
    pub lambda_prime: f64,
}

impl RiskBudget {
    pub fn new(lambda: f64, p_c_given_e: f64, p_s_given_c: f64) -> Result<Self, BayesError> {
        Ok(RiskBudget {
            lambda,
            p_c_given_e,
            p_s_given_c,
            lambda_prime: equivalent_risk(lambda, p_c_given_e, p_s_given_c)?,
        })
    }

    /// Most conservative budget: both conditional probabilities at 1.
    pub fn conservative(lambda: f64) -> Self {
        RiskBudget {
            lambda,
            p_c_given_e: 1.0,
            p_s_given_c: 1.0,
            lambda_prime: lambda,
        }
    }
}

/// Equivalent acceptable risk once controllability and severity probabilities
/// are factored out: `lambda / (p_c * p_s)`.
pub fn equivalent_risk(lambda: f64, p_c: f64, p_s: f64) -> Result<f64, BayesError> {
    for p in [p_c, p_s] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(BayesError::ZeroProbability(p));
        }
    }
    Ok(lambda / (p_c * p_s))
}

/// Outcome of one blind-time injection run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelevanceOutcome {
    /// True when the replay ended in a collision.
    pub relevant: bool,
    /// Bumper gap at scenario onset, m (partition key).
    pub d_a_at_onset: f64,
}

/// Replay a following scenario with the front object invisible for the first
/// `duration` seconds of the span, RSS afterwards.
///
/// The replay window is extended past the mined span to the end of the common
/// track coverage: the blind ego diverges from the recorded rear, so contact
/// may fall beyond the span over which the recorded pair stayed apart.
pub fn inject_fn_and_simulate(
    fs: &FollowingScenario,
    ts: &TrackSet,
    duration: f64,
    params: &RssParams,
    dt: f64,
) -> Result<RelevanceOutcome, BayesError> {
    let set = ModelParamSet {
        rss: *params,
        ..ModelParamSet::default()
    };
    let mut extended = fs.clone();
    if let (Some(rear), Some(front)) = (ts.track(fs.rear_id), ts.track(fs.front_id)) {
        extended.frame_span.1 = rear.last_frame().min(front.last_frame());
    }
    let scenario = ReplayScenario::Following(extended);
    let trace = simulate_policy_with_presence(
        &scenario,
        ts,
        BehaviorModel::Rss,
        &set,
        dt,
        Some(duration.max(0.0)),
    )?;
    Ok(RelevanceOutcome {
        relevant: trace.collision,
        d_a_at_onset: fs.initial_state.2,
    })
}

/// Per-duration, per-partition relevant-scenario probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionProbabilityTable {
    pub durations: Vec<f64>,
    pub scheme: PartitionScheme,
    /// `probs[d][i]`: fraction of all scenarios that are relevant under
    /// duration `d` with onset gap in partition `i`.
    pub probs: Vec<Vec<f64>>,
    pub n_total_scenarios: usize,
}

impl PartitionProbabilityTable {
    /// Row for one duration.
    pub fn row(&self, d_idx: usize) -> &[f64] {
        &self.probs[d_idx]
    }
}

/// Count relevant scenarios per duration and partition over a pair suite.
/// Fully deterministic; scenario replays run in parallel per duration row.
pub fn partition_probabilities(
    pairs: &[FollowingScenario],
    ts: &TrackSet,
    durations: &[f64],
    scheme: &PartitionScheme,
    params: &RssParams,
    dt: f64,
) -> Result<PartitionProbabilityTable, BayesError> {
    if pairs.is_empty() || durations.is_empty() {
        return Err(BayesError::EmptyInput);
    }
    scheme.validate()?;
    let n_total = pairs.len();
    let mut probs = Vec::with_capacity(durations.len());
    for &duration in durations {
        let outcomes: Vec<Result<RelevanceOutcome, BayesError>> = pairs
            .par_iter()
            .map(|fs| inject_fn_and_simulate(fs, ts, duration, params, dt))
            .collect();
        let mut counts = vec![0usize; scheme.n_partitions];
        for outcome in outcomes {
            let outcome = outcome?;
            if outcome.relevant {
                if let Some(i) = scheme.index_of(outcome.d_a_at_onset) {
                    counts[i] += 1;
                }
            }
        }
        probs.push(
            counts
                .into_iter()
                .map(|c| c as f64 / n_total as f64)
                .collect(),
        );
    }
    Ok(PartitionProbabilityTable {
        durations: durations.to_vec(),
        scheme: *scheme,
        probs,
        n_total_scenarios: n_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ConstantTrackSpec, ManeuverTrackSpec, PhaseSpec, SyntheticRecording};
    use crate::scenario::extract_following_pairs;
    use crate::trajectory::VehicleClass;

    fn constant(id: u64, x0: f64, vx: f64) -> ConstantTrackSpec {
        ConstantTrackSpec {
            id,
            x0,
            vx,
            y: 1.875,
            lane_id: 1,
            width: 4.0,
            height: 1.8,
            class: VehicleClass::Car,
        }
    }

    /// One mined pair at a prescribed bumper gap. Each vehicle may carry
    /// braking phases; the recorded tracks must stay apart so the miner sees
    /// a full-length pair (real recordings contain no collisions).
    fn pair_recording(
        gap: f64,
        v_rear: f64,
        v_front: f64,
        rear_phases: Vec<PhaseSpec>,
        front_phases: Vec<PhaseSpec>,
    ) -> (TrackSet, FollowingScenario) {
        let mut rec = SyntheticRecording::two_lane(25.0, 500);
        for (id, x0, vx0, phases) in [
            (1u64, 0.0, v_rear, rear_phases),
            (2, gap + 4.0, v_front, front_phases),
        ] {
            if phases.is_empty() {
                rec.add_constant(constant(id, x0, vx0));
            } else {
                rec.add_maneuver(ManeuverTrackSpec {
                    id,
                    x0,
                    vx0,
                    y0: 1.875,
                    vy: 0.0,
                    move_frame: u64::MAX,
                    target_y: 1.875,
                    width: 4.0,
                    height: 1.8,
                    class: VehicleClass::Car,
                    phases,
                });
            }
        }
        let ts = rec.build();
        let pairs = extract_following_pairs(&ts, 5.0);
        assert_eq!(pairs.len(), 1, "fixture must mine exactly the (1, 2) pair");
        let fs = pairs[0].clone();
        assert_eq!(
            (fs.rear_id, fs.front_id),
            (1, 2),
            "recorded pair must not flip"
        );
        (ts, fs)
    }

    #[test]
    fn blindness_alone_closes_the_gap() {
        // Closing at 10 m/s from 40 m: contact after 4 s of blackout. The
        // recorded rear eases off late enough to stay apart in the recording.
        let (ts, fs) = pair_recording(
            40.0,
            30.0,
            20.0,
            vec![
                PhaseSpec {
                    frames: 38,
                    ax: 0.0,
                },
                PhaseSpec {
                    frames: 84,
                    ax: -3.0,
                },
            ],
            vec![],
        );
        let out = inject_fn_and_simulate(&fs, &ts, 10.0, &RssParams::default(), 0.01).unwrap();
        assert!(out.relevant);
        assert!((out.d_a_at_onset - 40.0).abs() < 1e-9);
    }

    #[test]
    fn zero_duration_with_safe_gap_is_irrelevant() {
        let p = RssParams::default();
        let d_min = crate::behavior::rss_min_distance(27.0, 27.0, &p);
        let (ts, fs) = pair_recording(d_min + 10.0, 27.0, 27.0, vec![], vec![]);
        let out = inject_fn_and_simulate(&fs, &ts, 0.0, &p, 0.01).unwrap();
        assert!(!out.relevant);
    }

    #[test]
    fn zero_duration_in_unmanageable_state_is_relevant() {
        // Tiny gap with closing speed: the recorded rear saved it by braking
        // harder than the policy's minimum rate, so the policy replay cannot.
        let (ts, fs) = pair_recording(
            5.0,
            30.0,
            25.0,
            vec![PhaseSpec {
                frames: 100,
                ax: -7.5,
            }],
            vec![],
        );
        let out = inject_fn_and_simulate(&fs, &ts, 0.0, &RssParams::default(), 0.01).unwrap();
        assert!(out.relevant);
    }

    /// Four pairs: one at 45 m whose front brakes to a stop (fatal only with
    /// blindness; the recorded rear brakes a second later and stays apart),
    /// three never-closing pairs at other partitions.
    fn four_pair_suite() -> (TrackSet, Vec<FollowingScenario>) {
        let mut rec = SyntheticRecording::two_lane(25.0, 500);
        rec.add_maneuver(ManeuverTrackSpec {
            id: 1,
            x0: 0.0,
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
            id: 2,
            x0: 49.0, // bumper gap 45 m, partition [25, 50)
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
        let mut x = 2000.0;
        for (i, gap) in [60.0, 110.0, 160.0].iter().enumerate() {
            let id = 10 + 2 * i as u64;
            rec.add_constant(constant(id, x, 27.0));
            rec.add_constant(constant(id + 1, x + gap + 4.0, 27.0));
            x += 1000.0;
        }
        let ts = rec.build();
        let mut pairs = extract_following_pairs(&ts, 5.0);
        pairs.retain(|p| p.initial_state.2 < 400.0); // drop cross-group pairs
        assert_eq!(pairs.len(), 4, "fixture must mine 4 pairs");
        (ts, pairs)
    }

    #[test]
    fn table_counts_single_relevant_pair() {
        let (ts, pairs) = four_pair_suite();
        let scheme = PartitionScheme::default();
        let table = partition_probabilities(
            &pairs,
            &ts,
            &[0.0, 1.5],
            &scheme,
            &RssParams::default(),
            0.01,
        )
        .unwrap();
        assert_eq!(table.n_total_scenarios, 4);
        // Duration 0: the RSS response handles the braking front from 45 m.
        assert!(
            table.probs[0].iter().all(|p| *p == 0.0),
            "row0 = {:?}",
            table.probs[0]
        );
        // Duration 1.5 s: only the braking-front pair becomes relevant, in [25, 50).
        assert_eq!(table.probs[1][1], 0.25, "row1 = {:?}", table.probs[1]);
        let sum: f64 = table.probs[1].iter().sum();
        assert!((sum - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rows_are_monotone_in_duration_on_fixture() {
        let (ts, pairs) = four_pair_suite();
        let scheme = PartitionScheme::default();
        let table = partition_probabilities(
            &pairs,
            &ts,
            &[0.0, 1.5, 4.0],
            &scheme,
            &RssParams::default(),
            0.01,
        )
        .unwrap();
        for i in 0..scheme.n_partitions {
            assert!(table.probs[0][i] <= table.probs[1][i] + 1e-12);
            assert!(table.probs[1][i] <= table.probs[2][i] + 1e-12);
        }
        // Cells are probabilities and rows sum to at most 1.
        for row in &table.probs {
            for p in row {
                assert!((0.0..=1.0).contains(p));
            }
            assert!(row.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn disjoint_partition_counts_are_additive() {
        // The per-partition relevance events partition the relevant set, so
        // the union probability equals the sum of the cells.
        let (ts, pairs) = four_pair_suite();
        let scheme = PartitionScheme::default();
        let table =
            partition_probabilities(&pairs, &ts, &[4.0], &scheme, &RssParams::default(), 0.01)
                .unwrap();
        let union: f64 = pairs
            .iter()
            .map(|fs| inject_fn_and_simulate(fs, &ts, 4.0, &RssParams::default(), 0.01).unwrap())
            .filter(|o| o.relevant && scheme.index_of(o.d_a_at_onset).is_some())
            .count() as f64
            / pairs.len() as f64;
        let sum: f64 = table.probs[0].iter().sum();
        assert!((sum - union).abs() < 1e-12);
    }

    #[test]
    fn determinism_bitwise() {
        let (ts, pairs) = four_pair_suite();
        let scheme = PartitionScheme::default();
        let a = partition_probabilities(
            &pairs,
            &ts,
            &[0.0, 2.0],
            &scheme,
            &RssParams::default(),
            0.01,
        )
        .unwrap();
        let b = partition_probabilities(
            &pairs,
            &ts,
            &[0.0, 2.0],
            &scheme,
            &RssParams::default(),
            0.01,
        )
        .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn equivalent_risk_identity() {
        assert_eq!(equivalent_risk(6.8e-7, 1.0, 1.0).unwrap(), 6.8e-7);
        assert!((equivalent_risk(1e-6, 0.5, 0.5).unwrap() - 4e-6).abs() < 1e-18);
        assert_eq!(
            equivalent_risk(1e-6, 1.0, 0.0).unwrap_err(),
            BayesError::ZeroProbability(0.0)
        );
        assert!(equivalent_risk(1e-6, 1.5, 1.0).is_err());
    }

    #[test]
    fn empty_input_rejected() {
        let (ts, _) = four_pair_suite();
        let err = partition_probabilities(
            &[],
            &ts,
            &[0.0],
            &PartitionScheme::default(),
            &RssParams::default(),
            0.01,
        )
        .unwrap_err();
        assert_eq!(err, BayesError::EmptyInput);
    }
}
