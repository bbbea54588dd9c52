pub mod allocate;
pub mod bayes;
pub mod compare;
pub mod echo_tracker;
pub mod extract;
pub mod harness;
pub mod pipeline;
pub mod plot;
pub mod severity;

use std::path::{Path, PathBuf};

use percreq_core::trajectory::{parse_meta, parse_tracks, ParseOptions, TrackSet};

use crate::config::PipelineConfig;
use crate::CliError;

/// Resolve the recording from flags/config, or fall back to the built-in
/// demo fixture. The fixture path writes the synthetic recording through the
/// regular CSV serializer and parses it back, so ingest is always exercised.
pub fn load_trackset(
    cfg: &PipelineConfig,
    out_dir: &Path,
    tracks_flag: &Option<PathBuf>,
    meta_flag: &Option<PathBuf>,
) -> Result<(TrackSet, bool), CliError> {
    let tracks_path = tracks_flag.clone().or_else(|| cfg.tracks.clone());
    let meta_path = meta_flag.clone().or_else(|| cfg.meta.clone());
    match (tracks_path, meta_path) {
        (Some(t), Some(m)) => {
            let meta = parse_meta(&m)?;
            let opts = ParseOptions {
                class_column: cfg.mining.class_column.clone(),
            };
            Ok((parse_tracks(&t, &meta, &opts)?, false))
        }
        (None, None) => {
            let demo = percreq_core::fixtures::demo_recording();
            let meta_csv = percreq_core::trajectory::serialize_meta(&demo.meta);
            let tracks_csv = percreq_core::trajectory::serialize_tracks(&demo);
            let meta_path = out_dir.join("fixture_meta.csv");
            let tracks_path = out_dir.join("fixture_tracks.csv");
            crate::artifacts::write_atomic(&meta_path, meta_csv.as_bytes())?;
            crate::artifacts::write_atomic(&tracks_path, tracks_csv.as_bytes())?;
            let meta = parse_meta(&meta_path)?;
            let opts = ParseOptions::default();
            Ok((parse_tracks(&tracks_path, &meta, &opts)?, true))
        }
        _ => Err(CliError::Config(
            "need both --tracks and --meta (or neither, for the built-in fixture)".into(),
        )),
    }
}
