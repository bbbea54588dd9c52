//! `pipeline`: the full decomposition chain — extract, compare, budgets,
//! partition probabilities, rate allocation, metric dataset, attribution,
//! component allocation, verification — emitting one requirement ledger.

use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::allocation::PartitionBounds;
use percreq_core::bayes::{partition_probabilities, RiskBudget};
use percreq_core::behavior::{compare_models, BehaviorModel, ReplayScenario};
use percreq_core::perception::{build_metric_dataset, GridSpec, SurrogateTracker};
use percreq_core::scenario::{
    detect_cutins, extract_following_pairs, filter_cutins, WanderingZone,
};
use percreq_core::severity::max_allowable_position_error;
use percreq_core::shapley::fit_perturbation_linear;
use percreq_core::units::kmh_to_ms;

use crate::artifacts::{
    print_summary, write_atomic, write_json, RequirementLevel, RequirementRecord,
};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(cfg: &PipelineConfig, out_dir: &Path, args: PipelineArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(cfg.seed);
    let mut artifacts: Vec<PathBuf> = Vec::new();
    let mut ledger: Vec<RequirementRecord> = Vec::new();

    ledger.push(RequirementRecord {
        name: "risk-acceptance".into(),
        level: RequirementLevel::System,
        quantity: "max hazard rate".into(),
        value: cfg.risk.lambda,
        units: "events/h".into(),
        provenance: "configuration (vehicle-level acceptance criterion)".into(),
    });

    // 1. Recording + cut-in mining.
    let (ts, used_fixture) = super::load_trackset(cfg, out_dir, &args.tracks, &args.meta)?;
    let wz = WanderingZone {
        half_width: cfg.mining.wandering_half_width,
    };
    let detected = detect_cutins(&ts, &wz);
    let kept = filter_cutins(
        &detected,
        &ts,
        cfg.mining.ttc_threshold,
        cfg.mining.car_only,
    )?;
    let cutins_path = out_dir.join("cutins.json");
    write_json(&cutins_path, &kept)?;
    artifacts.push(cutins_path);

    // 2. Behavior-model comparison over the kept cut-ins.
    let scenarios: Vec<ReplayScenario> = kept.iter().cloned().map(ReplayScenario::CutIn).collect();
    if !scenarios.is_empty() {
        let report = compare_models(
            &scenarios,
            &ts,
            &[BehaviorModel::Rss, BehaviorModel::Fsm, BehaviorModel::Cc],
            &cfg.behavior,
            cfg.sim_dt,
        )?;
        let path = out_dir.join("comparison.json");
        write_json(&path, &report)?;
        artifacts.push(path);
    }

    // 3. State-uncertainty budgets.
    let mut sc = percreq_core::severity::SeverityConfig::new(
        kmh_to_ms(cfg.severity.vr_kmh),
        kmh_to_ms(cfg.severity.vf_kmh),
    );
    sc.params = cfg.behavior.rss;
    sc.dt = cfg.severity.dt;
    sc.dv_max = kmh_to_ms(cfg.severity.dv_max_kmh);
    let pos_budget = max_allowable_position_error(&sc)?;
    ledger.push(RequirementRecord {
        name: "position-error-budget".into(),
        level: RequirementLevel::Subsystem,
        quantity: "max longitudinal position error".into(),
        value: pos_budget,
        units: "m".into(),
        provenance: format!(
            "max_allowable_position_error(v_r={:.3}, v_f={:.3}, dv_max={:.3})",
            sc.v_r, sc.v_f, sc.dv_max
        ),
    });
    let vel_budget =
        percreq_core::severity::max_allowable_velocity_error(pos_budget, sc.v_r, &cfg.behavior.rss);
    ledger.push(RequirementRecord {
        name: "velocity-error-budget".into(),
        level: RequirementLevel::Subsystem,
        quantity: "max front-speed overestimate".into(),
        value: vel_budget,
        units: "m/s".into(),
        provenance: format!(
            "max_allowable_velocity_error(pos_budget={pos_budget:.3}, v_f_max={:.3})",
            sc.v_r
        ),
    });

    // 4. Existence-uncertainty probabilities and rate allocation.
    let pairs = extract_following_pairs(&ts, cfg.mining.min_follow_duration);
    if pairs.is_empty() {
        return Err(CliError::Data("no following pairs in the recording".into()));
    }
    let table = partition_probabilities(
        &pairs,
        &ts,
        &cfg.durations,
        &cfg.partitions,
        &cfg.behavior.rss,
        cfg.sim_dt,
    )?;
    let probs_path = out_dir.join("partition_probs.json");
    write_json(&probs_path, &table)?;
    write_atomic(
        &out_dir.join("partition_probs.csv"),
        super::bayes::probs_csv(&table).as_bytes(),
    )?;
    artifacts.push(probs_path);
    artifacts.push(out_dir.join("partition_probs.csv"));

    let duration_idx = cfg
        .durations
        .iter()
        .position(|d| (d - cfg.allocation_duration).abs() < 1e-9)
        .ok_or_else(|| {
            CliError::Config(format!(
                "allocation_duration {} not in durations {:?}",
                cfg.allocation_duration, cfg.durations
            ))
        })?;
    let risk = RiskBudget::new(cfg.risk.lambda, cfg.risk.p_c_given_e, cfg.risk.p_s_given_c)?;
    let bounds = PartitionBounds {
        lo: cfg.allocation.rate_lo,
        hi: cfg.allocation.rate_hi,
    };
    let fn_artifact = super::bayes::build_fn_allocation(
        &table.probs[duration_idx],
        table.scheme.width,
        risk,
        cfg.allocation.confidence,
        &bounds,
        &format!(
            "partition_probabilities row duration={}s",
            cfg.allocation_duration
        ),
    )?;
    let fn_path = out_dir.join("fn_allocation.json");
    write_json(&fn_path, &fn_artifact)?;
    write_atomic(
        &out_dir.join("fn_allocation.csv"),
        super::bayes::allocation_csv(&fn_artifact).as_bytes(),
    )?;
    artifacts.push(fn_path);
    artifacts.push(out_dir.join("fn_allocation.csv"));
    ledger.extend(fn_artifact.records.iter().cloned());

    // The near-field partition budget becomes the component requirement,
    // mirroring the worked example: partition [width, 2*width).
    let requirement_idx = 1.min(fn_artifact.allocation.p.len() - 1);
    let component_requirement = fn_artifact.allocation.p[requirement_idx];

    // 5. Perturbation dataset and attribution.
    let grid = GridSpec::PerChannelWithDiagonal {
        steps: cfg.grid_steps,
    };
    let tracker = SurrogateTracker::default();
    let ds = build_metric_dataset(&cfg.harness, &grid, &tracker, seed)?;
    let ds_path = out_dir.join("metric_dataset.json");
    write_json(&ds_path, &ds)?;
    write_atomic(
        &out_dir.join("metric_dataset.csv"),
        super::harness::dataset_csv(&ds).as_bytes(),
    )?;
    artifacts.push(ds_path);
    artifacts.push(out_dir.join("metric_dataset.csv"));

    let mut explanations = Vec::new();
    for output in percreq_core::perception::MetricVector::OUTPUTS {
        explanations.push(fit_perturbation_linear(&ds, output)?);
    }
    let shap_path = out_dir.join("shap.json");
    write_json(&shap_path, &explanations)?;
    write_atomic(
        &out_dir.join("shap.csv"),
        super::harness::explanations_csv(&explanations, &ds.channels).as_bytes(),
    )?;
    artifacts.push(shap_path);
    artifacts.push(out_dir.join("shap.csv"));

    // 6. Component allocation against the near-field budget.
    let fn_explanation = explanations
        .iter()
        .find(|e| e.output_name == "fn_rate")
        .expect("fn_rate is always fitted");
    let component = super::allocate::build_component_allocation(
        fn_explanation,
        component_requirement,
        cfg.allocation.epsilon,
    )?;
    let comp_path = out_dir.join("component_allocation.json");
    write_json(&comp_path, &component)?;
    artifacts.push(comp_path);
    ledger.extend(component.records.iter().cloned());

    // 7. Verification runs.
    let runs = args.runs.unwrap_or(cfg.verify_runs);
    let report = percreq_core::allocation::verify_allocation(
        &component.allocation,
        &cfg.harness,
        &tracker,
        component_requirement,
        runs,
        seed,
    )?;
    let verify_path = out_dir.join("verification.json");
    write_json(&verify_path, &report)?;
    write_atomic(
        &out_dir.join("verification_runs.csv"),
        super::allocate::runs_csv(&report).as_bytes(),
    )?;
    artifacts.push(verify_path);
    artifacts.push(out_dir.join("verification_runs.csv"));

    let ledger_path = out_dir.join("ledger.json");
    write_json(&ledger_path, &ledger)?;
    artifacts.push(ledger_path);

    print_summary(
        "pipeline",
        &artifacts,
        serde_json::json!({
            "fixture": used_fixture,
            "cutins_kept": kept.len(),
            "following_pairs": pairs.len(),
            "position_budget_m": pos_budget,
            "component_requirement": component_requirement,
            "verification_pass": report.pass,
            "ledger_records": ledger.len(),
        }),
    );
    Ok(())
}
