//! Pipeline configuration: one JSON document with per-subcommand sections.
//! Command-line flags override config values; every default is a fixed
//! constant so artifacts are reproducible from (config, seed) alone.

use std::path::PathBuf;

use percreq_core::behavior::ModelParamSet;
use percreq_core::perception::HarnessConfig;
use percreq_core::PartitionScheme;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Acceptable system-level hazard rate, events/h.
    pub lambda: f64,
    pub p_c_given_e: f64,
    pub p_s_given_c: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            lambda: 6.8e-7,
            p_c_given_e: 1.0,
            p_s_given_c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeverityCliConfig {
    pub vr_kmh: f64,
    pub vf_kmh: f64,
    pub dv_max_kmh: f64,
    pub dt: f64,
}

impl Default for SeverityCliConfig {
    fn default() -> Self {
        SeverityCliConfig {
            vr_kmh: 130.0,
            vf_kmh: 80.0,
            dv_max_kmh: 50.0,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub wandering_half_width: f64,
    pub ttc_threshold: f64,
    pub car_only: bool,
    /// Minimum following-pair duration, seconds.
    pub min_follow_duration: f64,
    /// Name of the optional vehicle-class column in the tracks CSV.
    pub class_column: String,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            wandering_half_width: 0.375,
            ttc_threshold: 5.0,
            car_only: true,
            min_follow_duration: 5.0,
            class_column: "class".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationConfig {
    /// Confidence level of the mileage cost.
    pub confidence: f64,
    /// Upper-box margin keeping the development cost finite.
    pub epsilon: f64,
    pub rate_lo: f64,
    pub rate_hi: f64,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        AllocationConfig {
            confidence: 0.95,
            epsilon: 1e-6,
            rate_lo: 1e-15,
            rate_hi: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Global seed; per-stage seeds derive from it. Fixed default, never
    /// wall-clock.
    pub seed: u64,
    pub tracks: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub risk: RiskConfig,
    pub behavior: ModelParamSet,
    pub severity: SeverityCliConfig,
    pub mining: MiningConfig,
    pub partitions: PartitionScheme,
    /// Blackout durations for the partition table, seconds.
    pub durations: Vec<f64>,
    /// Duration row whose partition budgets feed the component allocation.
    pub allocation_duration: f64,
    pub harness: HarnessConfig,
    /// Steps per channel of the perturbation grid.
    pub grid_steps: usize,
    pub allocation: AllocationConfig,
    pub verify_runs: usize,
    /// Replay timestep for behavior simulations, seconds.
    pub sim_dt: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            tracks: None,
            meta: None,
            risk: RiskConfig::default(),
            behavior: ModelParamSet::default(),
            severity: SeverityCliConfig::default(),
            mining: MiningConfig::default(),
            partitions: PartitionScheme::default(),
            durations: vec![0.0, 0.5, 1.0, 2.0, 3.0],
            allocation_duration: 1.0,
            harness: HarnessConfig::default(),
            grid_steps: 21,
            allocation: AllocationConfig::default(),
            verify_runs: 1000,
            sim_dt: 0.01,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        match path {
            None => Ok(PipelineConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("bad config {}: {e}", p.display())))
            }
        }
    }
}
