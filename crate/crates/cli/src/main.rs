//! `percreq` — decompose a vehicle-level risk acceptance criterion into
//! quantitative perception requirements over drone-recorded highway data.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 infeasible
//! allocation.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Infeasible(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }
}

impl From<percreq_core::trajectory::TrajectoryError> for CliError {
    fn from(e: percreq_core::trajectory::TrajectoryError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<percreq_core::scenario::ScenarioError> for CliError {
    fn from(e: percreq_core::scenario::ScenarioError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<percreq_core::behavior::BehaviorError> for CliError {
    fn from(e: percreq_core::behavior::BehaviorError) -> Self {
        match e {
            percreq_core::behavior::BehaviorError::UnknownModel(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<percreq_core::severity::SeverityError> for CliError {
    fn from(e: percreq_core::severity::SeverityError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<percreq_core::bayes::BayesError> for CliError {
    fn from(e: percreq_core::bayes::BayesError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<percreq_core::shapley::ShapleyError> for CliError {
    fn from(e: percreq_core::shapley::ShapleyError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<percreq_core::perception::PerceptionError> for CliError {
    fn from(e: percreq_core::perception::PerceptionError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<percreq_core::allocation::AllocationError> for CliError {
    fn from(e: percreq_core::allocation::AllocationError) -> Self {
        match e {
            percreq_core::allocation::AllocationError::Infeasible { .. } => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "percreq",
    version,
    about = "Decompose a risk acceptance criterion into quantitative perception requirements"
)]
struct Cli {
    /// JSON configuration file; flags override config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = "percreq-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine and filter cut-in scenarios from a recording.
    ExtractCutins(commands::extract::ExtractArgs),
    /// Replay behavior models against mined cut-ins and count collisions.
    CompareModels(commands::compare::CompareArgs),
    /// Sample the position-error → collision-severity relation.
    SeverityCurve(commands::severity::SeverityCurveArgs),
    /// Invert the severity relation into a position-error budget.
    PositionBudget(commands::severity::PositionBudgetArgs),
    /// Map the position budget to a front-speed error budget.
    VelocityBudget(commands::severity::VelocityBudgetArgs),
    /// Estimate relevant-scenario probabilities per distance partition.
    PartitionProbs(commands::bayes::PartitionProbsArgs),
    /// Allocate per-partition miss-rate budgets under the mileage cost.
    AllocateFn(commands::bayes::AllocateFnArgs),
    /// Generate a synthetic detection sequence.
    GenSynthetic(commands::harness::GenSyntheticArgs),
    /// Build the perturbation-level metric dataset.
    MetricDataset(commands::harness::MetricDatasetArgs),
    /// Attribute output metrics to detector channels.
    Shap(commands::harness::ShapArgs),
    /// Allocate component quality levels against a requirement.
    AllocateComponents(commands::allocate::AllocateComponentsArgs),
    /// Verify an allocation with seeded perturbation runs.
    Verify(commands::allocate::VerifyArgs),
    /// Run the whole decomposition end to end and emit the ledger.
    Pipeline(commands::pipeline::PipelineArgs),
    /// Convert an artifact into plottable CSV.
    PlotData(commands::plot::PlotDataArgs),
    /// Identity tracker speaking the external-tracker contract (for tests).
    #[command(hide = true)]
    EchoTracker,
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SOTIF_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            CliError::Config(format!(
                "SOTIF_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        if n == 0 {
            return Err(CliError::Config("SOTIF_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    configure_threads()?;
    let cfg = PipelineConfig::load(cli.config.as_ref())?;
    let out_dir = cli.out_dir;
    match cli.command {
        Command::ExtractCutins(args) => commands::extract::run(&cfg, &out_dir, args),
        Command::CompareModels(args) => commands::compare::run(&cfg, &out_dir, args),
        Command::SeverityCurve(args) => commands::severity::run_curve(&cfg, &out_dir, args),
        Command::PositionBudget(args) => commands::severity::run_position(&cfg, &out_dir, args),
        Command::VelocityBudget(args) => commands::severity::run_velocity(&cfg, &out_dir, args),
        Command::PartitionProbs(args) => commands::bayes::run_probs(&cfg, &out_dir, args),
        Command::AllocateFn(args) => commands::bayes::run_allocate(&cfg, &out_dir, args),
        Command::GenSynthetic(args) => commands::harness::run_gen(&cfg, &out_dir, args),
        Command::MetricDataset(args) => commands::harness::run_dataset(&cfg, &out_dir, args),
        Command::Shap(args) => commands::harness::run_shap(&cfg, &out_dir, args),
        Command::AllocateComponents(args) => {
            commands::allocate::run_components(&cfg, &out_dir, args)
        }
        Command::Verify(args) => commands::allocate::run_verify(&cfg, &out_dir, args),
        Command::Pipeline(args) => commands::pipeline::run(&cfg, &out_dir, args),
        Command::PlotData(args) => commands::plot::run(&out_dir, args),
        Command::EchoTracker => commands::echo_tracker::run(),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
