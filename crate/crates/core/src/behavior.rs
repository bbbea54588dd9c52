//! Intended behavior models (RSS, FSM, CC driver) behind one policy interface,
//! replayed against mined scenarios to count collisions.
//!
//! Replay convention: the ego runs the policy while the other vehicle follows
//! its recorded kinematics. Positions inside [`PolicyState`] are
//! direction-normalized bumper positions — `x_ego` is the ego front bumper and
//! `x_obj` the object rear bumper along the driving direction — so
//! `gap = x_obj - x_ego` regardless of carriageway. Cruise means holding the
//! current speed (zero command), not replaying recorded acceleration, which
//! isolates the policy's effect. Stopped vehicles stay stopped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{CutInScenario, FollowingScenario};
use crate::trajectory::{Track, TrackSet};
use crate::units::G;

#[derive(Debug, Error, PartialEq)]
pub enum BehaviorError {
    #[error("unknown behavior model `{0}`")]
    UnknownModel(String),
    #[error("parameters do not match model {0:?}")]
    ParamsMismatch(BehaviorModel),
    #[error("scenario references vehicle {0} which is not in the track set")]
    DanglingReference(u64),
    #[error("cut-in scenario has no ego vehicle")]
    MissingEgo,
    #[error("dt must lie in (0, 0.1], got {0}")]
    BadTimestep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BehaviorModel {
    Rss,
    Fsm,
    Cc,
}

impl std::str::FromStr for BehaviorModel {
    type Err = BehaviorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rss" => Ok(BehaviorModel::Rss),
            "fsm" => Ok(BehaviorModel::Fsm),
            "cc" => Ok(BehaviorModel::Cc),
            other => Err(BehaviorError::UnknownModel(other.to_string())),
        }
    }
}

/// RSS longitudinal parameters. `a_max_g` is in units of g as conventionally
/// printed; everything else is SI.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct RssParams {
    pub rho: f64,
    pub a_max_accel: f64,
    pub a_min_brake: f64,
    pub a_max_brake: f64,
    pub j_max: f64,
    pub a_max_g: f64,
}

impl Default for RssParams {
    fn default() -> Self {
        RssParams {
            rho: 0.75,
            a_max_accel: 3.0,
            a_min_brake: 6.0,
            a_max_brake: 6.0,
            j_max: 12.65,
            a_max_g: 0.774,
        }
    }
}

/// Fuzzy safety model parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FsmParams {
    pub tau: f64,
    pub b_ego_comf: f64,
    pub b_ego_max: f64,
    pub b_cutin_max: f64,
    pub j_max: f64,
    pub a_max_g: f64,
}

impl Default for FsmParams {
    fn default() -> Self {
        FsmParams {
            tau: 0.75,
            b_ego_comf: 3.0,
            b_ego_max: 6.0,
            b_cutin_max: 7.0,
            j_max: 12.65,
            a_max_g: 0.774,
        }
    }
}

/// Competent-and-careful driver parameters: binary no-braking/full-braking.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CcParams {
    pub tau: f64,
    pub b_ego_max: f64,
    pub j_max: f64,
    pub a_max_g: f64,
}

impl Default for CcParams {
    fn default() -> Self {
        CcParams {
            tau: 0.75,
            b_ego_max: 6.0,
            j_max: 12.65,
            a_max_g: 0.774,
        }
    }
}

/// Model-tagged parameter bundle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum PolicyParams {
    Rss(RssParams),
    Fsm(FsmParams),
    Cc(CcParams),
}

impl PolicyParams {
    pub fn model(&self) -> BehaviorModel {
        match self {
            PolicyParams::Rss(_) => BehaviorModel::Rss,
            PolicyParams::Fsm(_) => BehaviorModel::Fsm,
            PolicyParams::Cc(_) => BehaviorModel::Cc,
        }
    }

    fn jerk_limit(&self) -> f64 {
        match self {
            PolicyParams::Rss(p) => p.j_max,
            PolicyParams::Fsm(p) => p.j_max,
            PolicyParams::Cc(p) => p.j_max,
        }
    }

    fn accel_cap(&self) -> f64 {
        match self {
            PolicyParams::Rss(p) => p.a_max_g * G,
            PolicyParams::Fsm(p) => p.a_max_g * G,
            PolicyParams::Cc(p) => p.a_max_g * G,
        }
    }
}

/// Defaults for all three models, bundled for comparisons.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelParamSet {
    pub rss: RssParams,
    pub fsm: FsmParams,
    pub cc: CcParams,
}

impl ModelParamSet {
    pub fn for_model(&self, model: BehaviorModel) -> PolicyParams {
        match model {
            BehaviorModel::Rss => PolicyParams::Rss(self.rss),
            BehaviorModel::Fsm => PolicyParams::Fsm(self.fsm),
            BehaviorModel::Cc => PolicyParams::Cc(self.cc),
        }
    }
}

/// RSS minimum longitudinal safe distance between a rear vehicle at `v_r` and
/// a front vehicle at `v_f`, both in m/s.
pub fn rss_min_distance(v_r: f64, v_f: f64, p: &RssParams) -> f64 {
    let v_reacted = v_r + p.rho * p.a_max_accel;
    let d = v_r * p.rho
        + 0.5 * p.a_max_accel * p.rho * p.rho
        + v_reacted * v_reacted / (2.0 * p.a_min_brake)
        - v_f * v_f / (2.0 * p.a_max_brake);
    d.max(0.0)
}

/// Instantaneous world state fed to a policy. Positions are bumper positions
/// along the driving direction (see module docs); speeds are clamped >= 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PolicyState {
    pub x_ego: f64,
    pub v_ego: f64,
    pub x_obj: f64,
    pub v_obj: f64,
    pub obj_present: bool,
    pub t: f64,
}

impl PolicyState {
    pub fn gap(&self) -> f64 {
        self.x_obj - self.x_ego
    }
}

/// FSM braking demand in [0, 1] from the graded proximity surface:
/// zero at the comfort distance, one at the unsafe distance.
fn fsm_braking_demand(s: &PolicyState, p: &FsmParams) -> f64 {
    let project = |b_ego: f64| {
        (s.v_ego * p.tau + s.v_ego * s.v_ego / (2.0 * b_ego)
            - s.v_obj * s.v_obj / (2.0 * p.b_cutin_max))
            .max(0.0)
    };
    let d_unsafe = project(p.b_ego_max);
    let d_comf = project(p.b_ego_comf);
    let gap = s.gap();
    if gap >= d_comf {
        return 0.0;
    }
    if d_comf - d_unsafe <= 1e-9 {
        return 1.0;
    }
    ((d_comf - gap) / (d_comf - d_unsafe)).clamp(0.0, 1.0)
}

/// CC full-braking trigger: stopping need under maximum ego braking after the
/// reaction time, given the front vehicle's observed deceleration. When the
/// front is not braking the relative-motion form applies.
fn cc_triggered(s: &PolicyState, p: &CcParams, front_decel: f64) -> bool {
    let need = if front_decel > 0.1 {
        s.v_ego * p.tau + s.v_ego * s.v_ego / (2.0 * p.b_ego_max)
            - s.v_obj * s.v_obj / (2.0 * front_decel)
    } else {
        let v_rel = s.v_ego - s.v_obj;
        if v_rel <= 0.0 {
            return false;
        }
        v_rel * p.tau + v_rel * v_rel / (2.0 * p.b_ego_max)
    };
    s.gap() < need
}

/// Stateful policy executor: tracks the violation clock for reaction delays,
/// estimates the front vehicle's deceleration from consecutive states, and
/// jerk-limits the commanded acceleration across steps.
#[derive(Debug, Clone)]
pub struct PolicyRunner {
    params: PolicyParams,
    violation_since: Option<f64>,
    prev_cmd: f64,
    prev_obj_v: Option<(f64, f64)>,
}

impl PolicyRunner {
    pub fn new(params: PolicyParams) -> Self {
        PolicyRunner {
            params,
            violation_since: None,
            prev_cmd: 0.0,
            prev_obj_v: None,
        }
    }

    /// Steady-state command before jerk limiting.
    fn raw_command(&mut self, s: &PolicyState) -> f64 {
        if !s.obj_present {
            self.violation_since = None;
            return 0.0;
        }
        match &self.params {
            PolicyParams::Rss(p) => {
                if s.gap() < rss_min_distance(s.v_ego, s.v_obj, p) {
                    let since = *self.violation_since.get_or_insert(s.t);
                    if s.t - since >= p.rho {
                        -p.a_min_brake
                    } else {
                        0.0
                    }
                } else {
                    self.violation_since = None;
                    0.0
                }
            }
            PolicyParams::Fsm(p) => {
                let u = fsm_braking_demand(s, p);
                if u > 0.0 {
                    let since = *self.violation_since.get_or_insert(s.t);
                    if s.t - since >= p.tau {
                        -(p.b_ego_comf + u * (p.b_ego_max - p.b_ego_comf))
                    } else {
                        0.0
                    }
                } else {
                    self.violation_since = None;
                    0.0
                }
            }
            PolicyParams::Cc(p) => {
                let front_decel = match self.prev_obj_v {
                    Some((t_prev, v_prev)) if s.t > t_prev => (v_prev - s.v_obj) / (s.t - t_prev),
                    _ => 0.0,
                };
                if cc_triggered(s, p, front_decel) {
                    -p.b_ego_max
                } else {
                    0.0
                }
            }
        }
    }

    /// Produce the jerk- and magnitude-limited command for this step.
    pub fn step(&mut self, s: &PolicyState, dt: f64) -> f64 {
        let raw = self.raw_command(s);
        if s.obj_present {
            self.prev_obj_v = Some((s.t, s.v_obj));
        } else {
            self.prev_obj_v = None;
        }
        let cap = self.params.accel_cap();
        let target = raw.clamp(-cap, cap);
        let dj = self.params.jerk_limit() * dt;
        let cmd = target.clamp(self.prev_cmd - dj, self.prev_cmd + dj);
        self.prev_cmd = cmd;
        cmd
    }
}

/// One-shot policy evaluation (no reaction-clock or jerk history).
///
/// A state that currently violates the model's trigger is treated as having
/// violated it since t = 0, so reaction delays compare against `s.t`. The
/// returned command is magnitude-capped but not jerk-limited.
pub fn policy_step(
    model: BehaviorModel,
    s: &PolicyState,
    params: &PolicyParams,
) -> Result<f64, BehaviorError> {
    if params.model() != model {
        return Err(BehaviorError::ParamsMismatch(model));
    }
    let mut runner = PolicyRunner::new(*params);
    runner.violation_since = Some(0.0);
    let raw = runner.raw_command(s);
    let cap = params.accel_cap();
    Ok(raw.clamp(-cap, cap))
}

/// One simulated step: the state seen by the policy and the command it issued.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStep {
    pub state: PolicyState,
    pub a_cmd: f64,
}

/// Result of replaying a scenario under a policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTrace {
    pub dt: f64,
    pub steps: Vec<SimStep>,
    pub collision: bool,
    /// Relative speed (ego minus object) at first contact, m/s.
    pub collision_dv: Option<f64>,
}

impl SimTrace {
    pub fn final_gap(&self) -> f64 {
        self.steps
            .last()
            .map(|s| s.state.gap())
            .unwrap_or(f64::INFINITY)
    }
}

/// A scenario the replay engine accepts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ReplayScenario {
    CutIn(CutInScenario),
    Following(FollowingScenario),
}

impl ReplayScenario {
    pub fn ego_id(&self) -> Option<u64> {
        match self {
            ReplayScenario::CutIn(c) => c.ego_id,
            ReplayScenario::Following(f) => Some(f.rear_id),
        }
    }

    pub fn other_id(&self) -> u64 {
        match self {
            ReplayScenario::CutIn(c) => c.cutin_id,
            ReplayScenario::Following(f) => f.front_id,
        }
    }
}

/// Direction-normalized replay view of a recorded track: rear-bumper position
/// and speed along the driving direction, linearly interpolated between frames.
struct TrackReplay<'a> {
    track: &'a Track,
    s_dir: f64,
    fps: f64,
}

impl<'a> TrackReplay<'a> {
    fn new(track: &'a Track, fps: f64) -> Self {
        TrackReplay {
            track,
            s_dir: track.direction_sign(),
            fps,
        }
    }

    /// (rear bumper position, speed >= 0) at absolute time `t` seconds.
    fn state_at(&self, t: f64) -> (f64, f64) {
        let f = t * self.fps;
        let first = self.track.first_frame() as f64;
        let last = self.track.last_frame() as f64;
        let f = f.clamp(first, last);
        let i0 = (f.floor() as u64).min(self.track.last_frame());
        let i1 = (i0 + 1).min(self.track.last_frame());
        let alpha = f - i0 as f64;
        let s0 = self.track.sample_at(i0).unwrap();
        let s1 = self.track.sample_at(i1).unwrap();
        let x = (1.0 - alpha) * s0.x + alpha * s1.x;
        let v = (1.0 - alpha) * s0.vx + alpha * s1.vx;
        let width = s0.width;
        ((self.s_dir * x) - 0.5 * width, (self.s_dir * v).max(0.0))
    }
}

/// Replay a scenario with the ego under `model` and the other vehicle on its
/// recorded kinematics. A collision is flagged when the bumper gap reaches
/// zero; the trace stops at first contact.
pub fn simulate_policy(
    scenario: &ReplayScenario,
    ts: &TrackSet,
    model: BehaviorModel,
    params: &ModelParamSet,
    dt: f64,
) -> Result<SimTrace, BehaviorError> {
    simulate_policy_with_presence(scenario, ts, model, params, dt, None)
}

/// Like [`simulate_policy`], but with the object's first-perceived time
/// overridden: before `present_override` seconds past the window start the
/// policy sees no object. Used to inject detection blackouts.
pub fn simulate_policy_with_presence(
    scenario: &ReplayScenario,
    ts: &TrackSet,
    model: BehaviorModel,
    params: &ModelParamSet,
    dt: f64,
    present_override: Option<f64>,
) -> Result<SimTrace, BehaviorError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(BehaviorError::BadTimestep(dt));
    }
    let ego_id = scenario.ego_id().ok_or(BehaviorError::MissingEgo)?;
    let other_id = scenario.other_id();
    let ego_track = ts
        .track(ego_id)
        .ok_or(BehaviorError::DanglingReference(ego_id))?;
    let obj_track = ts
        .track(other_id)
        .ok_or(BehaviorError::DanglingReference(other_id))?;
    let fps = ts.frame_rate();

    let (start_frame, end_frame, present_from_frame) = match scenario {
        ReplayScenario::CutIn(c) => {
            let start =
                c.t0.max(ego_track.first_frame())
                    .max(obj_track.first_frame());
            let end = ego_track.last_frame().min(obj_track.last_frame());
            (start, end, c.t1)
        }
        ReplayScenario::Following(f) => {
            let start = f.frame_span.0;
            let end = f
                .frame_span
                .1
                .min(ego_track.last_frame())
                .min(obj_track.last_frame());
            (start, end, f.frame_span.0)
        }
    };
    if start_frame > end_frame {
        return Err(BehaviorError::DanglingReference(ego_id));
    }

    let obj = TrackReplay::new(obj_track, fps);
    let s_dir = ego_track.direction_sign();
    let ego_start = ego_track
        .sample_at(start_frame)
        .ok_or(BehaviorError::DanglingReference(ego_id))?;
    let ego_width = ego_start.width;

    let t_start = start_frame as f64 / fps;
    let t_end = end_frame as f64 / fps;
    let present_from = match present_override {
        Some(offset) => t_start + offset,
        None => present_from_frame as f64 / fps,
    };

    let mut x_ego = s_dir * ego_start.x + 0.5 * ego_width; // front bumper
    let mut v_ego = (s_dir * ego_start.vx).max(0.0);
    let mut runner = PolicyRunner::new(params.for_model(model));
    let mut steps = Vec::new();

    let n_steps = ((t_end - t_start) / dt).floor() as usize;
    let mut collision = false;
    let mut collision_dv = None;
    for k in 0..=n_steps {
        let t = t_start + k as f64 * dt;
        let (x_obj, v_obj) = obj.state_at(t);
        let state = PolicyState {
            x_ego,
            v_ego,
            x_obj,
            v_obj,
            obj_present: t >= present_from,
            t,
        };
        let a_cmd = runner.step(&state, dt);
        steps.push(SimStep { state, a_cmd });
        if state.gap() <= 0.0 {
            collision = true;
            collision_dv = Some(v_ego - v_obj);
            break;
        }
        // Integrate the ego exactly over the step, stopping at standstill.
        let v_next = v_ego + a_cmd * dt;
        if v_next <= 0.0 && a_cmd < 0.0 {
            let t_stop = v_ego / (-a_cmd);
            x_ego += v_ego * t_stop + 0.5 * a_cmd * t_stop * t_stop;
            v_ego = 0.0;
        } else {
            x_ego += v_ego * dt + 0.5 * a_cmd * dt * dt;
            v_ego = v_next.max(0.0);
        }
    }

    Ok(SimTrace {
        dt,
        steps,
        collision,
        collision_dv,
    })
}

/// Outcome of one scenario under one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario_index: usize,
    pub ego_id: u64,
    pub other_id: u64,
    pub collision: bool,
    pub collision_dv: Option<f64>,
}

/// Per-model collision statistics over a scenario suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: BehaviorModel,
    pub collisions: usize,
    pub outcomes: Vec<ScenarioOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ModelComparison>,
}

/// Replay every scenario under every listed model. Rows are model-major in
/// input order; outcomes keep scenario order, so the report is deterministic.
pub fn compare_models(
    scenarios: &[ReplayScenario],
    ts: &TrackSet,
    models: &[BehaviorModel],
    params: &ModelParamSet,
    dt: f64,
) -> Result<ComparisonReport, BehaviorError> {
    let mut rows = Vec::with_capacity(models.len());
    for &model in models {
        let mut outcomes = Vec::with_capacity(scenarios.len());
        for (i, sc) in scenarios.iter().enumerate() {
            let trace = simulate_policy(sc, ts, model, params, dt)?;
            outcomes.push(ScenarioOutcome {
                scenario_index: i,
                ego_id: sc.ego_id().unwrap_or(u64::MAX),
                other_id: sc.other_id(),
                collision: trace.collision,
                collision_dv: trace.collision_dv,
            });
        }
        rows.push(ModelComparison {
            model,
            collisions: outcomes.iter().filter(|o| o.collision).count(),
            outcomes,
        });
    }
    Ok(ComparisonReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scenario::{detect_cutins, WanderingZone};
    use crate::units::kmh_to_ms;

    #[test]
    fn rss_distance_anchors() {
        let p = RssParams::default();
        let d1 = rss_min_distance(kmh_to_ms(130.0), kmh_to_ms(80.0), &p);
        assert!((d1 - 109.4).abs() < 0.05, "d_min(130,80) = {d1}");
        let d2 = rss_min_distance(kmh_to_ms(80.0), kmh_to_ms(80.0), &p);
        assert!((d2 - 26.3).abs() < 0.05, "d_min(80,80) = {d2}");
        let d3 = rss_min_distance(0.0, 0.0, &p);
        assert!((d3 - 1.265625).abs() < 1e-12, "d_min(0,0) = {d3}");
    }

    #[test]
    fn rss_distance_monotonicity_and_floor() {
        let p = RssParams::default();
        let mut prev = -1.0;
        for vr in 0..14 {
            let d = rss_min_distance(vr as f64 * 3.0, 20.0, &p);
            assert!(d >= prev);
            prev = d;
        }
        let mut prev = f64::INFINITY;
        for vf in 0..14 {
            let d = rss_min_distance(20.0, vf as f64 * 3.0, &p);
            assert!(d <= prev);
            prev = d;
        }
        // Fast front, slow rear: interior goes negative, clamps to zero.
        assert_eq!(rss_min_distance(0.0, 50.0, &p), 0.0);
    }

    fn state(gap: f64, v_ego: f64, v_obj: f64, t: f64) -> PolicyState {
        PolicyState {
            x_ego: 0.0,
            v_ego,
            x_obj: gap,
            v_obj,
            obj_present: true,
            t,
        }
    }

    #[test]
    fn rss_policy_cruises_above_safe_distance() {
        let params = PolicyParams::Rss(RssParams::default());
        let p = RssParams::default();
        let d_min = rss_min_distance(30.0, 20.0, &p);
        let cmd = policy_step(
            BehaviorModel::Rss,
            &state(d_min + 10.0, 30.0, 20.0, 5.0),
            &params,
        )
        .unwrap();
        assert_eq!(cmd, 0.0);
    }

    #[test]
    fn rss_policy_brakes_after_reaction() {
        let params = PolicyParams::Rss(RssParams::default());
        let p = RssParams::default();
        let d_min = rss_min_distance(30.0, 20.0, &p);
        let cmd = policy_step(
            BehaviorModel::Rss,
            &state(d_min - 1.0, 30.0, 20.0, 1.0),
            &params,
        )
        .unwrap();
        assert_eq!(cmd, -6.0);
        // Before the reaction time has elapsed the command is still cruise.
        let cmd = policy_step(
            BehaviorModel::Rss,
            &state(d_min - 1.0, 30.0, 20.0, 0.5),
            &params,
        )
        .unwrap();
        assert_eq!(cmd, 0.0);
    }

    #[test]
    fn cc_policy_is_two_valued() {
        use rand::Rng;
        use rand::SeedableRng;
        let params = PolicyParams::Cc(CcParams::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let s = state(
                rng.random_range(0.0..200.0),
                rng.random_range(0.0..45.0),
                rng.random_range(0.0..45.0),
                rng.random_range(0.0..10.0),
            );
            let cmd = policy_step(BehaviorModel::Cc, &s, &params).unwrap();
            assert!(cmd == 0.0 || cmd == -6.0, "cc produced {cmd}");
        }
    }

    #[test]
    fn mismatched_params_rejected() {
        let err = policy_step(
            BehaviorModel::Rss,
            &state(10.0, 10.0, 10.0, 0.0),
            &PolicyParams::Cc(CcParams::default()),
        )
        .unwrap_err();
        assert_eq!(err, BehaviorError::ParamsMismatch(BehaviorModel::Rss));
    }

    #[test]
    fn unknown_model_string_rejected() {
        let err = "idm".parse::<BehaviorModel>().unwrap_err();
        assert!(matches!(err, BehaviorError::UnknownModel(_)));
    }

    fn mined_late_cutin() -> (crate::trajectory::TrackSet, ReplayScenario) {
        let (ts, ego, cutin) = fixtures::late_cutin_recording();
        let scs = detect_cutins(&ts, &WanderingZone::default());
        let sc = scs
            .iter()
            .find(|s| s.cutin_id == cutin && s.ego_id == Some(ego))
            .expect("late cut-in not mined")
            .clone();
        (ts, ReplayScenario::CutIn(sc))
    }

    #[test]
    fn cutin_at_twice_safe_distance_never_collides_under_rss() {
        // Oracle: the closed-form guarantee holds whenever the gap is at or
        // above the safe distance at every instant, which a double-distance
        // start with mild closing ensures.
        let p = RssParams::default();
        let (v_ego, v_cut) = (30.0, 25.0);
        let d_min = rss_min_distance(v_ego, v_cut, &p);
        let mut rec = fixtures::SyntheticRecording::two_lane(25.0, 1000);
        rec.add_constant(fixtures::ConstantTrackSpec {
            id: 1,
            x0: 0.0,
            vx: v_ego,
            y: 5.625,
            lane_id: 2,
            width: 4.0,
            height: 1.8,
            class: crate::trajectory::VehicleClass::Car,
        });
        rec.add_cutin(fixtures::CutInTrackSpec {
            id: 10,
            x0: 2.0 * d_min + 4.0, // bumper gap exactly 2 * d_min
            vx: v_cut,
            y0: 1.875,
            vy: 0.6,
            move_frame: 50,
            target_y: 5.625,
            width: 4.0,
            height: 1.8,
            class: crate::trajectory::VehicleClass::Car,
        });
        let ts = rec.build();
        let sc = detect_cutins(&ts, &WanderingZone::default())
            .into_iter()
            .find(|s| s.ego_id == Some(1))
            .map(ReplayScenario::CutIn)
            .expect("cut-in mined");
        let trace = simulate_policy(
            &sc,
            &ts,
            BehaviorModel::Rss,
            &ModelParamSet::default(),
            0.01,
        )
        .unwrap();
        assert!(!trace.collision, "final gap {}", trace.final_gap());
    }

    #[test]
    fn late_cutin_collides_under_cc_but_not_fsm_or_rss() {
        let (ts, sc) = mined_late_cutin();
        let params = ModelParamSet::default();
        let cc = simulate_policy(&sc, &ts, BehaviorModel::Cc, &params, 0.01).unwrap();
        assert!(cc.collision, "CC final gap {}", cc.final_gap());
        assert!(cc.collision_dv.unwrap() > 0.0);
        let fsm = simulate_policy(&sc, &ts, BehaviorModel::Fsm, &params, 0.01).unwrap();
        assert!(!fsm.collision, "FSM final gap {}", fsm.final_gap());
        let rss = simulate_policy(&sc, &ts, BehaviorModel::Rss, &params, 0.01).unwrap();
        assert!(!rss.collision, "RSS final gap {}", rss.final_gap());
    }

    #[test]
    fn safe_suite_has_zero_collisions_under_rss_and_fsm() {
        let ts = fixtures::safe_cutin_recording();
        let scs = detect_cutins(&ts, &WanderingZone::default());
        assert!(scs.len() >= 2);
        let scenarios: Vec<ReplayScenario> = scs.into_iter().map(ReplayScenario::CutIn).collect();
        let report = compare_models(
            &scenarios,
            &ts,
            &[BehaviorModel::Rss, BehaviorModel::Fsm],
            &ModelParamSet::default(),
            0.01,
        )
        .unwrap();
        for row in &report.rows {
            assert_eq!(row.collisions, 0, "{:?} collided", row.model);
        }
    }

    #[test]
    fn comparison_report_shape() {
        let (ts, sc) = mined_late_cutin();
        let report = compare_models(
            &[sc],
            &ts,
            &[BehaviorModel::Rss, BehaviorModel::Cc],
            &ModelParamSet::default(),
            0.01,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].outcomes.len(), 1);
        let cc_row = report
            .rows
            .iter()
            .find(|r| r.model == BehaviorModel::Cc)
            .unwrap();
        assert!(cc_row.collisions >= 1);
    }

    #[test]
    fn commands_respect_jerk_limit_across_trace() {
        let (ts, sc) = mined_late_cutin();
        let params = ModelParamSet::default();
        for model in [BehaviorModel::Rss, BehaviorModel::Fsm, BehaviorModel::Cc] {
            let trace = simulate_policy(&sc, &ts, model, &params, 0.01).unwrap();
            for pair in trace.steps.windows(2) {
                let dj = (pair[1].a_cmd - pair[0].a_cmd).abs();
                assert!(dj <= 12.65 * 0.01 + 1e-9, "{model:?} jerk {dj}");
            }
        }
    }

    #[test]
    fn rss_guarantee_holds_from_safe_gap_with_braking_front() {
        // Front brakes at varying rates <= a_max_brake from varying speeds;
        // the ego starts exactly at the RSS distance. No run may collide.
        let p = RssParams::default();
        for &(v_r, v_f, brake) in &[
            (30.0, 20.0, 6.0),
            (36.111, 22.222, 6.0),
            (20.0, 15.0, 4.0),
            (33.0, 33.0, 6.0),
            (25.0, 10.0, 2.0),
        ] {
            let d_min = rss_min_distance(v_r, v_f, &p);
            let mut rec = fixtures::SyntheticRecording::two_lane(25.0, 1200);
            rec.add_constant(fixtures::ConstantTrackSpec {
                id: 1,
                x0: 0.0,
                vx: v_r,
                y: 1.875,
                lane_id: 1,
                width: 4.0,
                height: 1.8,
                class: crate::trajectory::VehicleClass::Car,
            });
            rec.add_maneuver(fixtures::ManeuverTrackSpec {
                id: 2,
                x0: d_min + 4.0, // centers offset so bumper gap equals d_min
                vx0: v_f,
                y0: 1.875,
                vy: 0.0,
                move_frame: u64::MAX,
                target_y: 1.875,
                width: 4.0,
                height: 1.8,
                class: crate::trajectory::VehicleClass::Car,
                phases: vec![fixtures::PhaseSpec {
                    frames: 1200,
                    ax: -brake,
                }],
            });
            let ts = rec.build();
            let sc = ReplayScenario::Following(FollowingScenario {
                rear_id: 1,
                front_id: 2,
                frame_span: (0, 1199),
                initial_state: (v_r, v_f, d_min),
                rear_class: crate::trajectory::VehicleClass::Car,
            });
            let trace = simulate_policy(
                &sc,
                &ts,
                BehaviorModel::Rss,
                &ModelParamSet::default(),
                0.01,
            )
            .unwrap();
            assert!(
                !trace.collision,
                "collided from safe gap: v_r={v_r} v_f={v_f} brake={brake}, final gap {}",
                trace.final_gap()
            );
        }
    }
}
