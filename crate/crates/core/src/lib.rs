//! Decomposition of a vehicle-level risk acceptance criterion into quantitative
//! perception requirements.
//!
//! The crate is organized as a pipeline over drone-recorded highway trajectories:
//!
//! * [`trajectory`] — parse highD-style recordings into typed, validated track sets.
//! * [`scenario`] — mine cut-in episodes and lane-keeping following pairs.
//! * [`behavior`] — intended behavior models (RSS, FSM, CC driver) replayed
//!   against mined scenarios to count collisions.
//! * [`severity`] — collision-severity simulation under injected position error,
//!   inverted into position/velocity error budgets.
//! * [`bayes`] — distance-partitioned relevant-scenario probabilities under
//!   false-negative injection, plus the equivalent-risk identity.
//! * [`shapley`] — exact and kernel-regression Shapley attribution, and the
//!   continuous perturbation-level regression mode.
//! * [`perception`] — synthetic detection sequences, ground-truth-mixing
//!   perturbation, a surrogate fusion tracker, and tracking metrics.
//! * [`allocation`] — constrained allocation of false-negative budgets across
//!   distance partitions and of quality levels across detector channels, with
//!   end-to-end verification.
//!
//! All randomized operations take explicit seeds and are bit-reproducible.

pub mod allocation;
pub mod bayes;
pub mod behavior;
pub mod fixtures;
pub mod numeric;
pub mod perception;
pub mod scenario;
pub mod severity;
pub mod shapley;
pub mod trajectory;
pub mod units;

pub use allocation::{ComponentAllocation, PartitionAllocation, VerificationReport};
pub use bayes::{PartitionProbabilityTable, PartitionScheme, RiskBudget};
pub use behavior::{BehaviorModel, FsmParams, PolicyParams, PolicyState, RssParams, SimTrace};
pub use perception::{DetectionFrame, LevelVector, MetricVector};
pub use scenario::{CutInScenario, FollowingScenario, WanderingZone};
pub use severity::{SeverityConfig, SeverityCurve};
pub use shapley::{PerturbationDataset, ShapleyExplanation};
pub use trajectory::{RecordingMeta, Track, TrackSample, TrackSet};
