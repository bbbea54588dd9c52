//! Hidden `echo-tracker`: a minimal tracker speaking the external-tracker
//! JSON-lines contract. Every plane detection becomes a track whose id is its
//! index within the frame. Exists so the subprocess interface can be exercised
//! end to end without a real tracker.

use std::io::{BufRead, Write};

use percreq_core::perception::{TrackedBox, TrackerInputLine, TrackerOutputLine};

use crate::CliError;

pub fn run() -> Result<(), CliError> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let input: TrackerInputLine = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("bad tracker input: {e}")))?;
        let tracks: Vec<TrackedBox> = input
            .det2d
            .iter()
            .enumerate()
            .map(|(i, d)| TrackedBox {
                track_id: i as u64,
                box2: d.shape,
                box3: None,
            })
            .collect();
        let output = TrackerOutputLine {
            frame: input.frame,
            tracks,
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&output).map_err(|e| CliError::Data(e.to_string()))?
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}
