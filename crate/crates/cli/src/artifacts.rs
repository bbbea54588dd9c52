//! Artifact plumbing: atomic file writes, the requirement ledger record, and
//! the one-line JSON summaries each subcommand prints.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Write atomically: temp file in the same directory, then rename. Error
/// exits therefore never leave a partially written artifact behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("mkdir {}: {e}", parent.display())))?;
        }
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Data(format!("write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::Data(format!("rename into {}: {e}", path.display()))
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serialize: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("parse {}: {e}", path.display())))
}

/// Requirement level in the decomposition ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequirementLevel {
    System,
    Subsystem,
    Component,
}

/// One decomposed requirement with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequirementRecord {
    pub name: String,
    pub level: RequirementLevel,
    pub quantity: String,
    pub value: f64,
    pub units: String,
    /// Which operation and configuration produced the value.
    pub provenance: String,
}

/// Print the one-line JSON summary for a finished subcommand.
pub fn print_summary(command: &str, artifacts: &[PathBuf], extra: serde_json::Value) {
    let mut obj = serde_json::json!({
        "command": command,
        "artifacts": artifacts.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    if let (Some(map), Some(extra_map)) = (obj.as_object_mut(), extra.as_object()) {
        for (k, v) in extra_map {
            map.insert(k.clone(), v.clone());
        }
    }
    println!("{obj}");
}
