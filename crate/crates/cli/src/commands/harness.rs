//! `gen-synthetic`, `metric-dataset`, `shap`: the perception-harness side.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::perception::{
    build_metric_dataset, generate_synthetic_sequence, ExternalTracker, GridSpec, LevelVector,
    MetricVector, SurrogateTracker, Tracker,
};
use percreq_core::shapley::{
    exact_shapley, fit_perturbation_linear, kernel_shap, CoalitionEnumeration, PerturbationDataset,
    ShapleyExplanation,
};

use crate::artifacts::{print_summary, write_atomic, write_json};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct GenSyntheticArgs {
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub gt_seed: Option<u64>,
    #[arg(long)]
    pub det_seed: Option<u64>,
}

pub fn run_gen(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: GenSyntheticArgs,
) -> Result<(), CliError> {
    let mut seq_cfg = cfg.harness.sequence.clone();
    if let Some(f) = args.frames {
        seq_cfg.n_frames = f;
    }
    if let Some(o) = args.objects {
        seq_cfg.n_objects = o;
    }
    let gt_seed = args.gt_seed.unwrap_or(cfg.harness.gt_seed);
    let det_seed = args.det_seed.unwrap_or(cfg.harness.det_seed);
    let seq = generate_synthetic_sequence(&seq_cfg, gt_seed, det_seed);

    // JSON-lines: header record, then one record per frame.
    let mut out = String::new();
    let header = serde_json::json!({
        "type": "synthetic-sequence",
        "config": seq_cfg,
        "gt_seed": gt_seed,
        "det_seed": det_seed,
        "n_frames": seq_cfg.n_frames,
    });
    out.push_str(&header.to_string());
    out.push('\n');
    for fi in 0..seq_cfg.n_frames {
        let line = serde_json::json!({
            "frame": fi,
            "gt_track": seq.gt.tracking_frames[fi].boxes,
            "gt2d": seq.gt.frames_2d[fi].boxes,
            "gt3d": seq.gt.frames_3d[fi].boxes,
            "det2d": seq.det_2d[fi].boxes,
            "det3d": seq.det_3d[fi].boxes,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    let path = out_dir.join("sequence.jsonl");
    write_atomic(&path, out.as_bytes())?;
    let boxes: usize = seq.gt.tracking_frames.iter().map(|f| f.boxes.len()).sum();
    print_summary(
        "gen-synthetic",
        &[path],
        serde_json::json!({ "frames": seq_cfg.n_frames, "gt_boxes": boxes }),
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct MetricDatasetArgs {
    /// Steps per channel of the perturbation grid.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// External tracker command (program plus arguments); surrogate when absent.
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    pub external_tracker: Option<Vec<String>>,
}

pub fn dataset_csv(ds: &PerturbationDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{},{}", ds.channels.join(","), ds.outputs.join(","));
    for row in &ds.rows {
        let levels: Vec<String> = row.levels.iter().map(|v| format!("{v:.6}")).collect();
        let outputs: Vec<String> = row.outputs.iter().map(|v| format!("{v:.9}")).collect();
        let _ = writeln!(out, "{},{}", levels.join(","), outputs.join(","));
    }
    out
}

pub fn dataset_jsonl(ds: &PerturbationDataset) -> String {
    let mut out = String::new();
    let header = serde_json::json!({
        "type": "perturbation-dataset",
        "channels": ds.channels,
        "outputs": ds.outputs,
        "norm": ds.norm,
    });
    out.push_str(&header.to_string());
    out.push('\n');
    for row in &ds.rows {
        out.push_str(
            &serde_json::json!({ "levels": row.levels, "outputs": row.outputs }).to_string(),
        );
        out.push('\n');
    }
    out
}

pub fn make_tracker(external: &Option<Vec<String>>) -> Box<dyn Tracker + Sync> {
    match external {
        Some(cmd) => Box::new(ExternalTracker {
            command: cmd.clone(),
        }),
        None => Box::new(SurrogateTracker::default()),
    }
}

pub fn run_dataset(
    cfg: &PipelineConfig,
    out_dir: &Path,
    args: MetricDatasetArgs,
) -> Result<(), CliError> {
    let grid = GridSpec::PerChannelWithDiagonal {
        steps: args.steps.unwrap_or(cfg.grid_steps),
    };
    let tracker = make_tracker(&args.external_tracker);
    let ds = build_metric_dataset(
        &cfg.harness,
        &grid,
        tracker.as_ref(),
        args.seed.unwrap_or(cfg.seed),
    )?;

    let json_path = out_dir.join("metric_dataset.json");
    let jsonl_path = out_dir.join("metric_dataset.jsonl");
    let csv_path = out_dir.join("metric_dataset.csv");
    write_json(&json_path, &ds)?;
    write_atomic(&jsonl_path, dataset_jsonl(&ds).as_bytes())?;
    write_atomic(&csv_path, dataset_csv(&ds).as_bytes())?;
    print_summary(
        "metric-dataset",
        &[json_path, jsonl_path, csv_path],
        serde_json::json!({ "rows": ds.rows.len() }),
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ShapMode {
    /// Ordinary least squares over the continuous perturbation levels.
    Continuous,
    /// Kernel-weighted least squares over all corner coalitions of the live
    /// harness model.
    KernelFull,
    /// Kernel regression over sampled coalitions.
    KernelSampled,
    /// Exact enumeration over the live harness model.
    Exact,
}

#[derive(Debug, Args)]
pub struct ShapArgs {
    /// Dataset artifact (required for --mode continuous).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output metric to attribute; default: every output column.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum, default_value_t = ShapMode::Continuous)]
    pub mode: ShapMode,
    /// Coalition samples for --mode kernel-sampled.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn explanations_csv(explanations: &[ShapleyExplanation], channels: &[String]) -> String {
    let mut out = String::from("output_name,phi0");
    for c in channels {
        let _ = write!(out, ",phi_{c}");
    }
    out.push_str(",mode\n");
    for ex in explanations {
        let _ = write!(out, "{},{:.9e}", ex.output_name, ex.phi0);
        for p in &ex.phi {
            let _ = write!(out, ",{p:.9e}");
        }
        let _ = writeln!(out, ",{:?}", ex.mode);
    }
    out
}

/// Evaluate the harness as a function of the level vector for corner modes.
fn harness_model(cfg: &PipelineConfig, output: &str, seed: u64) -> impl Fn(&[f64]) -> f64 {
    let harness = cfg.harness.clone();
    let seq = harness.generate();
    let tracker = SurrogateTracker::default();
    let output = output.to_string();
    move |z: &[f64]| {
        let level = LevelVector::from_slice(z).expect("level vector of 6");
        let (p2, p3) = percreq_core::perception::perturb::perturb_sequence(
            &seq,
            &level,
            harness.tau_iou,
            seed,
        )
        .expect("aligned frames");
        let tracked = tracker.track(&p2, &p3).expect("surrogate is infallible");
        let metrics = percreq_core::perception::compute_metrics(&tracked, &seq.gt, harness.tau_iou);
        metrics.by_name(&output).expect("known output")
    }
}

pub fn run_shap(cfg: &PipelineConfig, out_dir: &Path, args: ShapArgs) -> Result<(), CliError> {
    let outputs: Vec<String> = match &args.output {
        Some(o) => vec![o.clone()],
        None => MetricVector::OUTPUTS
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let seed = args.seed.unwrap_or(cfg.seed);
    let channels: Vec<String> = LevelVector::CHANNELS
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut explanations = Vec::new();
    match args.mode {
        ShapMode::Continuous => {
            let path = args
                .dataset
                .clone()
                .ok_or_else(|| CliError::Config("--mode continuous needs --dataset".into()))?;
            let ds: PerturbationDataset = crate::artifacts::read_json(&path)?;
            for output in &outputs {
                explanations.push(fit_perturbation_linear(&ds, output)?);
            }
        }
        mode => {
            // Corner modes evaluate the live surrogate harness: x = nothing
            // repaired, background = ground-truth quality.
            let x = LevelVector::zero().to_vec();
            let b = LevelVector::one().to_vec();
            for output in &outputs {
                let model = harness_model(cfg, output, seed);
                let ex = match mode {
                    ShapMode::KernelFull => {
                        kernel_shap(&model, &x, &b, CoalitionEnumeration::Full, output)?
                    }
                    ShapMode::KernelSampled => kernel_shap(
                        &model,
                        &x,
                        &b,
                        CoalitionEnumeration::Sampled {
                            n: args.samples,
                            seed,
                        },
                        output,
                    )?,
                    ShapMode::Exact => exact_shapley(&model, &x, &b, output)?,
                    ShapMode::Continuous => unreachable!(),
                };
                explanations.push(ex);
            }
        }
    }

    let json_path = out_dir.join("shap.json");
    let csv_path = out_dir.join("shap.csv");
    write_json(&json_path, &explanations)?;
    write_atomic(
        &csv_path,
        explanations_csv(&explanations, &channels).as_bytes(),
    )?;
    print_summary(
        "shap",
        &[json_path, csv_path],
        serde_json::json!({ "outputs": outputs, "mode": format!("{:?}", args.mode) }),
    );
    Ok(())
}
