//! `extract-cutins`: mine cut-in scenarios, apply relevance filters, emit the
//! scenario list as a JSON array.

use std::path::{Path, PathBuf};

use clap::Args;
use percreq_core::scenario::{detect_cutins, filter_cutins, WanderingZone};

use crate::artifacts::{print_summary, write_json};
use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Drop episodes whose minimum TTC exceeds this threshold, seconds.
    #[arg(long)]
    pub ttc_threshold: Option<f64>,
    /// Keep only car-vs-car episodes.
    #[arg(long)]
    pub car_only: Option<bool>,
    /// Wandering-zone half width, meters.
    #[arg(long)]
    pub wandering: Option<f64>,
    /// Also write the unfiltered list.
    #[arg(long, default_value_t = false)]
    pub raw: bool,
}

pub fn run(cfg: &PipelineConfig, out_dir: &Path, args: ExtractArgs) -> Result<(), CliError> {
    let (ts, _) = super::load_trackset(cfg, out_dir, &args.tracks, &args.meta)?;
    let wz = WanderingZone {
        half_width: args.wandering.unwrap_or(cfg.mining.wandering_half_width),
    };
    let detected = detect_cutins(&ts, &wz);
    let kept = filter_cutins(
        &detected,
        &ts,
        args.ttc_threshold.unwrap_or(cfg.mining.ttc_threshold),
        args.car_only.unwrap_or(cfg.mining.car_only),
    )?;

    let mut artifacts = vec![out_dir.join("cutins.json")];
    write_json(&artifacts[0], &kept)?;
    if args.raw {
        let raw_path = out_dir.join("cutins_raw.json");
        write_json(&raw_path, &detected)?;
        artifacts.push(raw_path);
    }
    print_summary(
        "extract-cutins",
        &artifacts,
        serde_json::json!({ "detected": detected.len(), "kept": kept.len() }),
    );
    Ok(())
}
