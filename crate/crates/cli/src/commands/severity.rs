//! `severity-curve`, `position-budget`, `velocity-budget`: the state-
//! uncertainty budgets. Speeds are taken in km/h on the flags, converted at
//! the boundary, stored SI in artifacts.

use std::fmt::Write as _;
use std::path::Path;

use clap::Args;
use percreq_core::severity::{
    max_allowable_position_error, max_allowable_velocity_error, severity_curve,
    velocity_error_to_position_error, SeverityConfig, SeverityCurve, SeverityError,
};
use percreq_core::units::{kmh_to_ms, ms_to_kmh};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    print_summary, write_atomic, write_json, RequirementLevel, RequirementRecord,
};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct SeverityCurveArgs {
    /// Rear (ego) speed, km/h.
    #[arg(long)]
    pub vr: Option<f64>,
    /// Front speed, km/h.
    #[arg(long)]
    pub vf: Option<f64>,
    /// Acceptable severity, km/h.
    #[arg(long)]
    pub dv_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of sampled errors.
    #[arg(long, default_value_t = 121)]
    pub points: usize,
    /// Upper end of the sampled error range, meters (default: past the safe
    /// distance so the invalid region shows).
    #[arg(long)]
    pub max_error: Option<f64>,
}

fn severity_config(
    cfg: &PipelineConfig,
    vr: Option<f64>,
    vf: Option<f64>,
    dv: Option<f64>,
    dt: Option<f64>,
) -> SeverityConfig {
    let mut sc = SeverityConfig::new(
        kmh_to_ms(vr.unwrap_or(cfg.severity.vr_kmh)),
        kmh_to_ms(vf.unwrap_or(cfg.severity.vf_kmh)),
    );
    sc.params = cfg.behavior.rss;
    sc.dt = dt.unwrap_or(cfg.severity.dt);
    sc.dv_max = kmh_to_ms(dv.unwrap_or(cfg.severity.dv_max_kmh));
    sc
}

/// Severity artifact: the sampled curve plus the inverted budget when finite.
#[derive(Debug, Serialize, Deserialize)]
pub struct SeverityArtifact {
    pub curve: SeverityCurve,
    pub position_error_budget_m: Option<f64>,
    /// "budget", "never-exceeds" or "always-exceeds".
    pub outcome: String,
    pub record: Option<RequirementRecord>,
}

pub fn curve_csv(curve: &SeverityCurve) -> String {
    let mut out = String::from("error_m,delta_v_kmh,segment\n");
    for p in &curve.points {
        let dv = p
            .delta_v()
            .map(|v| format!("{:.6}", ms_to_kmh(v)))
            .unwrap_or_default();
        let seg = p
            .segment()
            .map(|s| s.code().to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "{:.6},{},{}", p.pos_error, dv, seg);
    }
    out
}

fn budget_outcome(sc: &SeverityConfig) -> Result<(Option<f64>, String), CliError> {
    match max_allowable_position_error(sc) {
        Ok(budget) => Ok((Some(budget), "budget".to_string())),
        Err(SeverityError::NeverExceeds) => Ok((None, "never-exceeds".to_string())),
        Err(SeverityError::AlwaysExceeds) => Ok((None, "always-exceeds".to_string())),
        Err(e) => Err(e.into()),
    }
}

fn position_record(sc: &SeverityConfig, budget: f64) -> RequirementRecord {
    RequirementRecord {
        name: "position-error-budget".into(),
        level: RequirementLevel::Subsystem,
        quantity: "max longitudinal position error".into(),
        value: budget,
        units: "m".into(),
        provenance: format!(
            "max_allowable_position_error(v_r={:.3} m/s, v_f={:.3} m/s, dv_max={:.3} m/s, dt={})",
            sc.v_r, sc.v_f, sc.dv_max, sc.dt
        ),
    }
}

pub fn run_curve(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: SeverityCurveArgs,
) -> Result<(), CliError> {
    let sc = severity_config(cfg, args.vr, args.vf, args.dv_max, args.dt);
    let max_error = args.max_error.unwrap_or(sc.d_min() + 5.0);
    let curve = severity_curve(&sc, 0.0, max_error, args.points)?;
    let (budget, outcome) = budget_outcome(&sc)?;
    let artifact = SeverityArtifact {
        curve,
        position_error_budget_m: budget,
        outcome: outcome.clone(),
        record: budget.map(|b| position_record(&sc, b)),
    };

    let json_path = out_dir.join("severity_curve.json");
    let csv_path = out_dir.join("severity_curve.csv");
    write_json(&json_path, &artifact)?;
    write_atomic(&csv_path, curve_csv(&artifact.curve).as_bytes())?;
    print_summary(
        "severity-curve",
        &[json_path, csv_path],
        serde_json::json!({ "position_error_budget_m": budget, "outcome": outcome }),
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PositionBudgetArgs {
    #[arg(long)]
    pub vr: Option<f64>,
    #[arg(long)]
    pub vf: Option<f64>,
    #[arg(long)]
    pub dv_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

pub fn run_position(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: PositionBudgetArgs,
) -> Result<(), CliError> {
    let sc = severity_config(cfg, args.vr, args.vf, args.dv_max, args.dt);
    let (budget, outcome) = budget_outcome(&sc)?;
    let artifact = serde_json::json!({
        "outcome": outcome,
        "position_error_budget_m": budget,
        "record": budget.map(|b| position_record(&sc, b)),
        "config": sc,
    });
    let path = out_dir.join("position_budget.json");
    write_json(&path, &artifact)?;
    print_summary(
        "position-budget",
        &[path],
        serde_json::json!({ "position_error_budget_m": budget, "outcome": outcome }),
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct VelocityBudgetArgs {
    /// Position budget to invert, meters (default: computed from the severity
    /// configuration).
    #[arg(long)]
    pub pos_budget: Option<f64>,
    /// Worst-case front speed, km/h.
    #[arg(long)]
    pub vf_max: Option<f64>,
    /// Sampled speed errors for the mapping CSV, km/h.
    #[arg(long, default_value_t = 15.0)]
    pub map_to: f64,
}

/// Velocity budget artifact: the error mapping and the inverted budget.
#[derive(Debug, Serialize, Deserialize)]
pub struct VelocityBudgetArtifact {
    pub vf_max_ms: f64,
    pub position_budget_m: f64,
    pub velocity_error_budget_ms: f64,
    /// (speed error m/s, induced position error m) samples.
    pub map: Vec<(f64, f64)>,
    pub record: RequirementRecord,
}

pub fn run_velocity(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: VelocityBudgetArgs,
) -> Result<(), CliError> {
    let sc = severity_config(cfg, None, None, None, None);
    let pos_budget = match args.pos_budget {
        Some(b) => b,
        None => {
            let (budget, outcome) = budget_outcome(&sc)?;
            budget.ok_or_else(|| {
                CliError::Data(format!(
                    "severity outcome `{outcome}` yields no position budget to invert"
                ))
            })?
        }
    };
    let vf_max = kmh_to_ms(args.vf_max.unwrap_or(cfg.severity.vr_kmh));
    let budget = max_allowable_velocity_error(pos_budget, vf_max, &cfg.behavior.rss);
    let map: Vec<(f64, f64)> = (0..=60)
        .map(|k| {
            let e_v = kmh_to_ms(args.map_to) * k as f64 / 60.0;
            (
                e_v,
                velocity_error_to_position_error(e_v, vf_max, &cfg.behavior.rss),
            )
        })
        .collect();
    let artifact = VelocityBudgetArtifact {
        vf_max_ms: vf_max,
        position_budget_m: pos_budget,
        velocity_error_budget_ms: budget,
        map,
        record: RequirementRecord {
            name: "velocity-error-budget".into(),
            level: RequirementLevel::Subsystem,
            quantity: "max front-speed overestimate".into(),
            value: budget,
            units: "m/s".into(),
            provenance: format!("max_allowable_velocity_error(pos_budget={pos_budget:.3} m, v_f_max={vf_max:.3} m/s)"),
        },
    };
    let json_path = out_dir.join("velocity_budget.json");
    write_json(&json_path, &artifact)?;
    let mut csv = String::from("velocity_error_kmh,position_error_m\n");
    for (e_v, e_p) in &artifact.map {
        let _ = writeln!(csv, "{:.6},{:.6}", ms_to_kmh(*e_v), e_p);
    }
    let csv_path = out_dir.join("velocity_map.csv");
    write_atomic(&csv_path, csv.as_bytes())?;
    print_summary(
        "velocity-budget",
        &[json_path, csv_path],
        serde_json::json!({ "velocity_error_budget_kmh": ms_to_kmh(budget) }),
    );
    Ok(())
}
