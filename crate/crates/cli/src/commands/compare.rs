//! `compare-models`: replay behavior models against mined cut-ins, count
//! collisions, optionally dump one scenario's traces for plotting.

use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::behavior::{compare_models, simulate_policy, BehaviorModel, ReplayScenario};
use percreq_core::scenario::{detect_cutins, filter_cutins, WanderingZone};

use crate::artifacts::{print_summary, write_json};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Comma-separated models to replay (rss, fsm, cc).
    #[arg(long, value_delimiter = ',', default_values_t = vec!["rss".to_string(), "fsm".to_string(), "cc".to_string()])]
    pub models: Vec<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Also write per-model traces of this scenario index.
    #[arg(long)]
    pub trace_index: Option<usize>,
}

pub fn run(cfg: &PipelineConfig, out_dir: &Path, args: CompareArgs) -> Result<(), CliError> {
    let (ts, _) = super::load_trackset(cfg, out_dir, &args.tracks, &args.meta)?;
    let models: Vec<BehaviorModel> = args
        .models
        .iter()
        .map(|m| m.parse::<BehaviorModel>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let dt = args.dt.unwrap_or(cfg.sim_dt);

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
    if kept.is_empty() {
        return Err(CliError::Data(
            "no cut-in scenarios survive the filters".into(),
        ));
    }
    let scenarios: Vec<ReplayScenario> = kept.into_iter().map(ReplayScenario::CutIn).collect();
    let report = compare_models(&scenarios, &ts, &models, &cfg.behavior, dt)?;

    let mut artifacts = vec![out_dir.join("comparison.json")];
    write_json(&artifacts[0], &report)?;

    if let Some(idx) = args.trace_index {
        let scenario = scenarios
            .get(idx)
            .ok_or_else(|| CliError::Config(format!("trace index {idx} out of range")))?;
        for model in &models {
            let trace = simulate_policy(scenario, &ts, *model, &cfg.behavior, dt)?;
            let path = out_dir.join(format!("simtrace_{model:?}.json").to_lowercase());
            write_json(&path, &trace)?;
            artifacts.push(path);
        }
    }

    let counts: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|r| serde_json::json!({ "model": format!("{:?}", r.model), "collisions": r.collisions }))
        .collect();
    print_summary(
        "compare-models",
        &artifacts,
        serde_json::json!({ "scenarios": scenarios.len(), "collisions": counts }),
    );
    Ok(())
}
