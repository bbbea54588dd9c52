//! `partition-probs` and `allocate-fn`: existence-uncertainty budgets.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::allocation::{
    allocate_partition_requirements, PartitionAllocation, PartitionBounds,
};
use percreq_core::bayes::{partition_probabilities, PartitionProbabilityTable, RiskBudget};
use percreq_core::scenario::extract_following_pairs;

use crate::artifacts::{
    print_summary, write_atomic, write_json, RequirementLevel, RequirementRecord,
};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct PartitionProbsArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Blackout durations, seconds.
    #[arg(long, value_delimiter = ',')]
    pub durations: Option<Vec<f64>>,
    #[arg(long)]
    pub partitions: Option<usize>,
    /// Partition width, meters.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub min_follow: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

pub fn probs_csv(table: &PartitionProbabilityTable) -> String {
    let mut out = String::from("duration_s");
    for i in 0..table.scheme.n_partitions {
        let _ = write!(out, ",p{}", table.scheme.lower_bound(i));
    }
    out.push_str(",n_total\n");
    for (d, row) in table.durations.iter().zip(&table.probs) {
        let _ = write!(out, "{d}");
        for p in row {
            let _ = write!(out, ",{p:.9}");
        }
        let _ = writeln!(out, ",{}", table.n_total_scenarios);
    }
    out
}

pub fn run_probs(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: PartitionProbsArgs,
) -> Result<(), CliError> {
    let (ts, _) = super::load_trackset(cfg, out_dir, &args.tracks, &args.meta)?;
    let pairs = extract_following_pairs(
        &ts,
        args.min_follow.unwrap_or(cfg.mining.min_follow_duration),
    );
    if pairs.is_empty() {
        return Err(CliError::Data(
            "no following pairs found in the recording".into(),
        ));
    }
    let mut scheme = cfg.partitions;
    if let Some(n) = args.partitions {
        scheme.n_partitions = n;
    }
    if let Some(w) = args.width {
        scheme.width = w;
    }
    let durations = args.durations.unwrap_or_else(|| cfg.durations.clone());
    let table = partition_probabilities(
        &pairs,
        &ts,
        &durations,
        &scheme,
        &cfg.behavior.rss,
        args.dt.unwrap_or(cfg.sim_dt),
    )?;

    let json_path = out_dir.join("partition_probs.json");
    let csv_path = out_dir.join("partition_probs.csv");
    write_json(&json_path, &table)?;
    write_atomic(&csv_path, probs_csv(&table).as_bytes())?;
    print_summary(
        "partition-probs",
        &[json_path, csv_path],
        serde_json::json!({ "pairs": pairs.len(), "durations": table.durations }),
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct AllocateFnArgs {
    /// Partition-probability artifact produced by `partition-probs`.
    #[arg(long)]
    pub probs: Option<PathBuf>,
    /// Inline relevance probabilities (alternative to --probs).
    #[arg(long, value_delimiter = ',')]
    pub e: Option<Vec<f64>>,
    /// Which duration row of the table to allocate against, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Acceptable system-level hazard rate, events/h.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub p_c: Option<f64>,
    #[arg(long)]
    pub p_s: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
}

/// Allocation artifact with provenance and per-partition records.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct FnAllocationArtifact {
    pub allocation: PartitionAllocation,
    pub partition_lower_bounds_m: Vec<f64>,
    pub risk: RiskBudget,
    pub records: Vec<RequirementRecord>,
}

pub fn allocation_csv(artifact: &FnAllocationArtifact) -> String {
    let mut out = String::from("partition_low_m,rate_per_h\n");
    for (low, p) in artifact
        .partition_lower_bounds_m
        .iter()
        .zip(&artifact.allocation.p)
    {
        let _ = writeln!(out, "{low},{p:.9e}");
    }
    out
}

pub fn build_fn_allocation(
    e: &[f64],
    scheme_width: f64,
    risk: RiskBudget,
    confidence: f64,
    bounds: &PartitionBounds,
    provenance: &str,
) -> Result<FnAllocationArtifact, CliError> {
    let allocation = allocate_partition_requirements(e, risk.lambda_prime, confidence, bounds)?;
    let lower_bounds: Vec<f64> = (0..e.len()).map(|i| i as f64 * scheme_width).collect();
    let records = lower_bounds
        .iter()
        .zip(&allocation.p)
        .map(|(low, p)| RequirementRecord {
            name: format!("fn-rate-budget-[{low},{})", low + scheme_width),
            level: RequirementLevel::Subsystem,
            quantity: "max miss rate".into(),
            value: *p,
            units: "events/h".into(),
            provenance: provenance.to_string(),
        })
        .collect();
    Ok(FnAllocationArtifact {
        allocation,
        partition_lower_bounds_m: lower_bounds,
        risk,
        records,
    })
}

pub fn run_allocate(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: AllocateFnArgs,
) -> Result<(), CliError> {
    let risk = RiskBudget::new(
        args.lambda.unwrap_or(cfg.risk.lambda),
        args.p_c.unwrap_or(cfg.risk.p_c_given_e),
        args.p_s.unwrap_or(cfg.risk.p_s_given_c),
    )?;
    let confidence = args.confidence.unwrap_or(cfg.allocation.confidence);
    let bounds = PartitionBounds {
        lo: cfg.allocation.rate_lo,
        hi: cfg.allocation.rate_hi,
    };

    let (e, width, provenance) = match (&args.e, &args.probs) {
        (Some(e), None) => (
            e.clone(),
            cfg.partitions.width,
            "inline probabilities".to_string(),
        ),
        (None, Some(path)) => {
            let table: PartitionProbabilityTable = crate::artifacts::read_json(path)?;
            let duration = args.duration.unwrap_or(cfg.allocation_duration);
            let idx = table
                .durations
                .iter()
                .position(|d| (d - duration).abs() < 1e-9)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "duration {duration} not in table rows {:?}",
                        table.durations
                    ))
                })?;
            (
                table.probs[idx].clone(),
                table.scheme.width,
                format!(
                    "partition_probabilities row duration={duration}s over {} scenarios",
                    table.n_total_scenarios
                ),
            )
        }
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --probs or --e".into(),
            ));
        }
    };

    let artifact = build_fn_allocation(&e, width, risk, confidence, &bounds, &provenance)?;
    let json_path = out_dir.join("fn_allocation.json");
    let csv_path = out_dir.join("fn_allocation.csv");
    write_json(&json_path, &artifact)?;
    write_atomic(&csv_path, allocation_csv(&artifact).as_bytes())?;
    print_summary(
        "allocate-fn",
        &[json_path, csv_path],
        serde_json::json!({
            "lambda_prime": artifact.risk.lambda_prime,
            "lambda_used": artifact.allocation.lambda_used,
            "cost": artifact.allocation.cost,
        }),
    );
    Ok(())
}
