//! `allocate-components` and `verify`: component-level quality requirements
//! and their empirical verification.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::allocation::{
    allocate_component_requirements, verify_allocation, ComponentAllocation, VerificationReport,
};
use percreq_core::perception::LevelVector;
use percreq_core::shapley::ShapleyExplanation;

use crate::artifacts::{
    print_summary, write_atomic, write_json, RequirementLevel, RequirementRecord,
};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct AllocateComponentsArgs {
    /// Shapley artifact produced by `shap`.
    #[arg(long)]
    pub shap: PathBuf,
    /// Which output's attribution row to allocate against.
    #[arg(long, default_value = "fn_rate")]
    pub output: String,
    /// Subsystem-level requirement the constraint must meet.
    #[arg(long)]
    pub requirement: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// Component allocation artifact with per-channel records.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct ComponentAllocationArtifact {
    pub allocation: ComponentAllocation,
    pub channels: Vec<String>,
    pub requirement: f64,
    pub output_name: String,
    pub records: Vec<RequirementRecord>,
}

pub fn build_component_allocation(
    explanation: &ShapleyExplanation,
    requirement: f64,
    epsilon: f64,
) -> Result<ComponentAllocationArtifact, CliError> {
    let allocation =
        allocate_component_requirements(explanation.phi0, &explanation.phi, requirement, epsilon)?;
    let channels: Vec<String> = LevelVector::CHANNELS
        .iter()
        .map(|s| s.to_string())
        .collect();
    let records = channels
        .iter()
        .zip(&allocation.z)
        .map(|(c, z)| RequirementRecord {
            name: format!("quality-level-{c}"),
            level: RequirementLevel::Component,
            quantity: format!("min {c} quality level"),
            value: *z,
            units: "fraction of ground-truth quality".into(),
            provenance: format!(
                "allocate_component_requirements(output={}, phi0={:.6e}, requirement={:.6e})",
                explanation.output_name, explanation.phi0, requirement
            ),
        })
        .collect();
    Ok(ComponentAllocationArtifact {
        allocation,
        channels,
        requirement,
        output_name: explanation.output_name.clone(),
        records,
    })
}

pub fn run_components(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: AllocateComponentsArgs,
) -> Result<(), CliError> {
    let explanations: Vec<ShapleyExplanation> = crate::artifacts::read_json(&args.shap)?;
    let explanation = explanations
        .iter()
        .find(|e| e.output_name == args.output)
        .ok_or_else(|| {
            CliError::Config(format!("no attribution row for output `{}`", args.output))
        })?;
    let artifact = build_component_allocation(
        explanation,
        args.requirement,
        args.epsilon.unwrap_or(cfg.allocation.epsilon),
    )?;
    let path = out_dir.join("component_allocation.json");
    write_json(&path, &artifact)?;
    print_summary(
        "allocate-components",
        &[path],
        serde_json::json!({
            "z": artifact.allocation.z,
            "cost": artifact.allocation.cost,
            "constraint_value": artifact.allocation.constraint_value,
            "feasible": artifact.allocation.feasible,
        }),
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Component allocation artifact.
    #[arg(long)]
    pub allocation: PathBuf,
    /// Requirement to verify against (default: the artifact's requirement).
    #[arg(long)]
    pub requirement: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// External tracker command; surrogate when absent.
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    pub external_tracker: Option<Vec<String>>,
}

pub fn runs_csv(report: &VerificationReport) -> String {
    let mut out =
        String::from("run,fn_rate,fp_rate,det_acc_2d,det_acc_3d,det_a,ass_a,loc_a,hota_lite\n");
    for (i, m) in report.per_run.iter().enumerate() {
        let vals: Vec<String> = m.to_vec().iter().map(|v| format!("{v:.9}")).collect();
        let _ = writeln!(out, "{i},{}", vals.join(","));
    }
    out
}

pub fn run_verify(cfg: &PipelineConfig, out_dir: &Path, args: VerifyArgs) -> Result<(), CliError> {
    let artifact: ComponentAllocationArtifact = crate::artifacts::read_json(&args.allocation)?;
    let requirement = args.requirement.unwrap_or(artifact.requirement);
    let tracker = super::harness::make_tracker(&args.external_tracker);
    let report = verify_allocation(
        &artifact.allocation,
        &cfg.harness,
        tracker.as_ref(),
        requirement,
        args.runs.unwrap_or(cfg.verify_runs),
        args.seed.unwrap_or(cfg.seed),
    )?;
    let json_path = out_dir.join("verification.json");
    let csv_path = out_dir.join("verification_runs.csv");
    write_json(&json_path, &report)?;
    write_atomic(&csv_path, runs_csv(&report).as_bytes())?;
    print_summary(
        "verify",
        &[json_path, csv_path],
        serde_json::json!({
            "runs": report.runs,
            "pooled_fn_frame_rate": report.pooled_fn_frame_rate,
            "requirement": report.requirement,
            "pass": report.pass,
        }),
    );
    Ok(())
}
