//! `plot-data`: convert JSON artifacts into plain CSV ready for external
//! plotting tools.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::bayes::PartitionProbabilityTable;
use percreq_core::behavior::SimTrace;
use percreq_core::units::ms_to_kmh;

use crate::artifacts::{print_summary, read_json, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Replay trace: t, positions, speeds, commanded acceleration.
    Simtrace,
    /// Position error versus severity.
    SeverityCurve,
    /// Long-format partition probabilities.
    PartitionTable,
    /// Normalized performance summary of a verification report.
    PerfSummary,
    /// Speed error to position error mapping.
    VelocityMap,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    /// Artifact produced by a prior subcommand.
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Output CSV path (default: artifact path with .csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(_out_dir: &Path, args: PlotDataArgs) -> Result<(), CliError> {
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| args.artifact.with_extension("plot.csv"));
    let csv = match args.kind {
        PlotKind::Simtrace => {
            let trace: SimTrace = read_json(&args.artifact)?;
            let mut out = String::from("t,x_ego,v_ego,x_obj,v_obj,a_cmd\n");
            for step in &trace.steps {
                let s = &step.state;
                let _ = writeln!(
                    out,
                    "{:.4},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    s.t, s.x_ego, s.v_ego, s.x_obj, s.v_obj, step.a_cmd
                );
            }
            out
        }
        PlotKind::SeverityCurve => {
            let artifact: super::severity::SeverityArtifact = read_json(&args.artifact)?;
            super::severity::curve_csv(&artifact.curve)
        }
        PlotKind::PartitionTable => {
            let table: PartitionProbabilityTable = read_json(&args.artifact)?;
            let mut out = String::from("duration_s,partition_low_m,prob\n");
            for (d, row) in table.durations.iter().zip(&table.probs) {
                for (i, p) in row.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{:.9}", d, table.scheme.lower_bound(i), p);
                }
            }
            out
        }
        PlotKind::PerfSummary => {
            let report: percreq_core::allocation::VerificationReport = read_json(&args.artifact)?;
            let mut out = String::from("metric,percent\n");
            for entry in &report.summary {
                let _ = writeln!(out, "{},{:.4}", entry.metric, entry.percent);
            }
            out
        }
        PlotKind::VelocityMap => {
            let artifact: super::severity::VelocityBudgetArtifact = read_json(&args.artifact)?;
            let mut out = String::from("velocity_error_kmh,position_error_m\n");
            for (e_v, e_p) in &artifact.map {
                let _ = writeln!(out, "{:.6},{:.6}", ms_to_kmh(*e_v), e_p);
            }
            out
        }
    };
    write_atomic(&out_path, csv.as_bytes())?;
    print_summary(
        "plot-data",
        &[out_path],
        serde_json::json!({ "kind": format!("{:?}", args.kind) }),
    );
    Ok(())
}
