use criterion::{criterion_group, criterion_main, Criterion};

use percreq_core::allocation::{allocate_partition_requirements, PartitionBounds};
use percreq_core::behavior::{simulate_policy, BehaviorModel, ModelParamSet, ReplayScenario};
use percreq_core::fixtures;
use percreq_core::perception::{
    generate_synthetic_sequence, surrogate_mot, SequenceConfig, TrackerConfig,
};
use percreq_core::scenario::{detect_cutins, WanderingZone};
use percreq_core::severity::{severity_curve, SeverityConfig};
use percreq_core::shapley::{exact_shapley, kernel_shap, CoalitionEnumeration};
use percreq_core::units::kmh_to_ms;

fn bench_severity_curve(c: &mut Criterion) {
    let cfg = SeverityConfig::new(kmh_to_ms(130.0), kmh_to_ms(80.0));
    c.bench_function("severity_curve_100_points", |b| {
        b.iter(|| severity_curve(&cfg, 0.0, 30.0, 100).unwrap())
    });
}

fn bench_policy_replay(c: &mut Criterion) {
    let (ts, ego, cutin) = fixtures::late_cutin_recording();
    let sc = detect_cutins(&ts, &WanderingZone::default())
        .into_iter()
        .find(|s| s.cutin_id == cutin && s.ego_id == Some(ego))
        .map(ReplayScenario::CutIn)
        .expect("late cut-in mined");
    let params = ModelParamSet::default();
    c.bench_function("rss_replay_30s_at_10ms", |b| {
        b.iter(|| simulate_policy(&sc, &ts, BehaviorModel::Rss, &params, 0.01).unwrap())
    });
}

fn bench_shapley(c: &mut Criterion) {
    let model = |v: &[f64]| v[0] * v[1] + v[2].powi(2) - 0.5 * v[3] + v[4] * v[5] - v[6] * v[7];
    let x: Vec<f64> = (0..8).map(|i| 1.0 + 0.2 * i as f64).collect();
    let b: Vec<f64> = vec![0.0; 8];
    c.bench_function("exact_shapley_m8", |bch| {
        bch.iter(|| exact_shapley(model, &x, &b, "y").unwrap())
    });
    c.bench_function("kernel_shap_full_m8", |bch| {
        bch.iter(|| kernel_shap(model, &x, &b, CoalitionEnumeration::Full, "y").unwrap())
    });
}

fn bench_allocator(c: &mut Criterion) {
    let e = [0.05, 0.04, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005];
    let bounds = PartitionBounds::default();
    c.bench_function("allocate_partition_m8", |b| {
        b.iter(|| allocate_partition_requirements(&e, 6.8e-7, 0.95, &bounds).unwrap())
    });
}

fn bench_tracker(c: &mut Criterion) {
    let cfg = SequenceConfig {
        n_frames: 100,
        n_objects: 12,
        ..SequenceConfig::default()
    };
    let seq = generate_synthetic_sequence(&cfg, 1, 2);
    let tracker_cfg = TrackerConfig::default();
    c.bench_function("surrogate_mot_100_frames", |b| {
        b.iter(|| surrogate_mot(&seq.det_2d, &seq.det_3d, &tracker_cfg))
    });
}

criterion_group!(
    benches,
    bench_severity_curve,
    bench_policy_replay,
    bench_shapley,
    bench_allocator,
    bench_tracker
);
criterion_main!(benches);
