//! Parsing and validation of highD-style trajectory recordings.
//!
//! Two CSV files describe a recording: a meta file carrying the frame rate and
//! the lateral positions of the lane markings, and a tracks file with one row
//! per vehicle per frame. All parsed quantities are SI. Positions refer to the
//! bounding-box center; boxes are axis-aligned (the format carries no heading).
//!
//! Tracks with frame gaps are rejected outright rather than interpolated:
//! interpolation would fabricate kinematics that later feed safety math.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("file is empty or has no data rows")]
    EmptyFile,
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("malformed number at row {row}, column `{col}`")]
    MalformedNumber { row: usize, col: String },
    #[error("track {0} has non-contiguous frames")]
    NonContiguousFrames(u64),
    #[error("track {id} has duplicate frame {frame}")]
    DuplicateFrame { id: u64, frame: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Vehicle class as read from the optional class column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VehicleClass {
    Car,
    Truck,
    /// Any class string this crate does not recognize. Kept rather than
    /// rejected so non-car filters can act on it downstream.
    Other,
}

impl VehicleClass {
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_lowercase().as_str() {
            "car" => VehicleClass::Car,
            "truck" => VehicleClass::Truck,
            _ => VehicleClass::Other,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            VehicleClass::Car => "Car",
            VehicleClass::Truck => "Truck",
            VehicleClass::Other => "Other",
        }
    }
}

/// Recording-level metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub id: String,
    /// Frames per second, > 0.
    pub frame_rate: f64,
    /// Lateral lane-boundary positions in meters, sorted ascending.
    pub lane_marking_ys: Vec<f64>,
    /// Recording duration in seconds, >= 0. Zero when the meta file omits it.
    pub duration: f64,
}

impl RecordingMeta {
    /// Number of drivable lanes implied by the marking list.
    pub fn lane_count(&self) -> usize {
        self.lane_marking_ys.len().saturating_sub(1)
    }

    /// Lateral center of 1-based lane `lane_id`, if it resolves.
    pub fn lane_center(&self, lane_id: i64) -> Option<f64> {
        if lane_id < 1 || lane_id as usize > self.lane_count() {
            return None;
        }
        let i = (lane_id - 1) as usize;
        Some(0.5 * (self.lane_marking_ys[i] + self.lane_marking_ys[i + 1]))
    }

    /// 1-based lane index containing lateral position `y`, if any.
    pub fn lane_of(&self, y: f64) -> Option<i64> {
        for i in 0..self.lane_count() {
            if y >= self.lane_marking_ys[i] && y < self.lane_marking_ys[i + 1] {
                return Some(i as i64 + 1);
            }
        }
        None
    }
}

/// One vehicle observation. `x`/`y` are the box center; `width` is the
/// longitudinal extent and `height` the lateral extent, both in meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrackSample {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub lane_id: i64,
}

/// Per-vehicle time series with strictly increasing, gap-free frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Track {
    pub vehicle_id: u64,
    pub class: VehicleClass,
    pub samples: Vec<TrackSample>,
}

impl Track {
    pub fn first_frame(&self) -> u64 {
        self.samples[0].frame
    }

    pub fn last_frame(&self) -> u64 {
        self.samples[self.samples.len() - 1].frame
    }

    /// Sample at `frame`, if the track covers it.
    pub fn sample_at(&self, frame: u64) -> Option<&TrackSample> {
        if frame < self.first_frame() || frame > self.last_frame() {
            return None;
        }
        Some(&self.samples[(frame - self.first_frame()) as usize])
    }

    /// Sign of the dominant longitudinal motion (+1 driving toward +x).
    pub fn direction_sign(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|p| p.vx).sum();
        if s < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// A parsed recording: metadata plus one track per vehicle id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackSet {
    pub meta: RecordingMeta,
    pub tracks: BTreeMap<u64, Track>,
}

impl TrackSet {
    pub fn track(&self, id: u64) -> Option<&Track> {
        self.tracks.get(&id)
    }

    pub fn frame_rate(&self) -> f64 {
        self.meta.frame_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.meta.frame_rate
    }
}

/// Parser knobs. The class column name is configurable because trajectory
/// datasets do not agree on a vocabulary; anything unrecognized maps to
/// [`VehicleClass::Other`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub class_column: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            class_column: "class".to_string(),
        }
    }
}

fn parse_f64(field: &str, row: usize, col: &str) -> Result<f64, TrajectoryError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| TrajectoryError::MalformedNumber {
            row,
            col: col.to_string(),
        })
}

fn parse_u64(field: &str, row: usize, col: &str) -> Result<u64, TrajectoryError> {
    let v = parse_f64(field, row, col)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(TrajectoryError::MalformedNumber {
            row,
            col: col.to_string(),
        });
    }
    Ok(v as u64)
}

fn marking_list(field: &str, row: usize, col: &str) -> Result<Vec<f64>, TrajectoryError> {
    field
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(s, row, col))
        .collect()
}

/// Parse a recording meta CSV.
///
/// Required columns: `frameRate` and at least one of `laneMarkings`,
/// `upperLaneMarkings`, `lowerLaneMarkings` (semicolon-separated floats).
/// Optional: `id`, `duration`. Markings are merged and sorted ascending.
pub fn parse_meta(path: &Path) -> Result<RecordingMeta, TrajectoryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let frame_rate_col =
        col("frameRate").ok_or_else(|| TrajectoryError::MissingColumn("frameRate".into()))?;
    let marking_cols: Vec<usize> = ["laneMarkings", "upperLaneMarkings", "lowerLaneMarkings"]
        .iter()
        .filter_map(|n| col(n))
        .collect();
    if marking_cols.is_empty() {
        return Err(TrajectoryError::MissingColumn("laneMarkings".into()));
    }
    let id_col = col("id");
    let duration_col = col("duration");

    let record = match rdr.records().next() {
        Some(r) => r?,
        None => return Err(TrajectoryError::EmptyFile),
    };

    let frame_rate = parse_f64(&record[frame_rate_col], 1, "frameRate")?;
    if !frame_rate.is_finite() || frame_rate <= 0.0 {
        return Err(TrajectoryError::MalformedNumber {
            row: 1,
            col: "frameRate".into(),
        });
    }

    let mut markings = Vec::new();
    for &c in &marking_cols {
        markings.extend(marking_list(&record[c], 1, &headers[c])?);
    }
    markings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    markings.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let duration = match duration_col {
        Some(c) if !record[c].trim().is_empty() => parse_f64(&record[c], 1, "duration")?,
        _ => 0.0,
    };
    if duration < 0.0 {
        return Err(TrajectoryError::MalformedNumber {
            row: 1,
            col: "duration".into(),
        });
    }

    Ok(RecordingMeta {
        id: id_col.map(|c| record[c].to_string()).unwrap_or_default(),
        frame_rate,
        lane_marking_ys: markings,
        duration,
    })
}

const TRACK_COLUMNS: [&str; 11] = [
    "frame",
    "id",
    "x",
    "y",
    "width",
    "height",
    "xVelocity",
    "yVelocity",
    "xAcceleration",
    "yAcceleration",
    "laneId",
];

/// Parse a tracks CSV into a [`TrackSet`].
///
/// Rows may arrive in any order; samples are sorted by frame per vehicle and
/// must then be gap-free. Class is read from the configured class column when
/// present, else every vehicle is a `Car`.
pub fn parse_tracks(
    path: &Path,
    meta: &RecordingMeta,
    opts: &ParseOptions,
) -> Result<TrackSet, TrajectoryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let mut cols = Vec::with_capacity(TRACK_COLUMNS.len());
    for name in TRACK_COLUMNS {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TrajectoryError::MissingColumn(name.into()))?;
        cols.push(idx);
    }
    let class_col = headers.iter().position(|h| h == opts.class_column);

    let mut per_vehicle: BTreeMap<u64, (VehicleClass, Vec<TrackSample>)> = BTreeMap::new();
    let mut row_no = 0usize;
    for record in rdr.records() {
        let record = record?;
        row_no += 1;
        let frame = parse_u64(&record[cols[0]], row_no, "frame")?;
        let id = parse_u64(&record[cols[1]], row_no, "id")?;
        let sample = TrackSample {
            frame,
            x: parse_f64(&record[cols[2]], row_no, "x")?,
            y: parse_f64(&record[cols[3]], row_no, "y")?,
            width: parse_f64(&record[cols[4]], row_no, "width")?,
            height: parse_f64(&record[cols[5]], row_no, "height")?,
            vx: parse_f64(&record[cols[6]], row_no, "xVelocity")?,
            vy: parse_f64(&record[cols[7]], row_no, "yVelocity")?,
            ax: parse_f64(&record[cols[8]], row_no, "xAcceleration")?,
            ay: parse_f64(&record[cols[9]], row_no, "yAcceleration")?,
            lane_id: parse_f64(&record[cols[10]], row_no, "laneId")? as i64,
        };
        let entry = per_vehicle
            .entry(id)
            .or_insert_with(|| (VehicleClass::Car, Vec::new()));
        if let Some(c) = class_col {
            entry.0 = VehicleClass::from_label(&record[c]);
        }
        entry.1.push(sample);
    }
    if row_no == 0 {
        return Err(TrajectoryError::EmptyFile);
    }

    let mut tracks = BTreeMap::new();
    for (id, (class, mut samples)) in per_vehicle {
        samples.sort_by_key(|s| s.frame);
        for pair in samples.windows(2) {
            if pair[1].frame == pair[0].frame {
                return Err(TrajectoryError::DuplicateFrame {
                    id,
                    frame: pair[0].frame,
                });
            }
            if pair[1].frame != pair[0].frame + 1 {
                return Err(TrajectoryError::NonContiguousFrames(id));
            }
        }
        tracks.insert(
            id,
            Track {
                vehicle_id: id,
                class,
                samples,
            },
        );
    }

    Ok(TrackSet {
        meta: meta.clone(),
        tracks,
    })
}

/// Serialize a track set back to the tracks-CSV layout accepted by
/// [`parse_tracks`] (including the class column). Round-trips the typed
/// representation exactly up to float formatting.
pub fn serialize_tracks(ts: &TrackSet) -> String {
    let mut out = String::new();
    out.push_str(
        "frame,id,x,y,width,height,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId,class\n",
    );
    let mut rows: Vec<(&u64, &Track)> = ts.tracks.iter().collect();
    rows.sort_by_key(|(id, _)| **id);
    for (id, track) in rows {
        for s in &track.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.frame,
                id,
                s.x,
                s.y,
                s.width,
                s.height,
                s.vx,
                s.vy,
                s.ax,
                s.ay,
                s.lane_id,
                track.class.label()
            );
        }
    }
    out
}

/// Serialize recording metadata to the meta-CSV layout accepted by [`parse_meta`].
pub fn serialize_meta(meta: &RecordingMeta) -> String {
    let markings: Vec<String> = meta.lane_marking_ys.iter().map(|m| m.to_string()).collect();
    format!(
        "id,frameRate,duration,laneMarkings\n{},{},{},{}\n",
        meta.id,
        meta.frame_rate,
        meta.duration,
        markings.join(";")
    )
}

/// Kinds of per-track findings produced by [`validate_trackset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// |Δposition| between consecutive frames exceeds 3 × (track max speed × Δt).
    KinematicJump {
        vehicle_id: u64,
        frame: u64,
        axis: char,
        delta: f64,
        bound: f64,
    },
    /// A sample field is outside its allowed range (non-positive extent, ...).
    BoundViolation {
        vehicle_id: u64,
        frame: u64,
        field: String,
        value: f64,
    },
    /// A lane id that does not resolve against the recording's lane markings.
    UnknownLane {
        vehicle_id: u64,
        frame: u64,
        lane_id: i64,
    },
}

/// Validation output. Violations are report entries, never hard errors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Check kinematic consistency and field bounds across a track set.
///
/// The position-consistency bound per axis is 3 × (max |speed| on that axis
/// over the track, floored at 1 m/s) × Δt, loose enough to pass honest noise
/// while catching teleporting boxes.
pub fn validate_trackset(ts: &TrackSet) -> ValidationReport {
    let dt = ts.dt();
    let mut report = ValidationReport::default();
    for (id, track) in &ts.tracks {
        let vmax_x = track
            .samples
            .iter()
            .map(|s| s.vx.abs())
            .fold(1.0f64, f64::max);
        let vmax_y = track
            .samples
            .iter()
            .map(|s| s.vy.abs())
            .fold(1.0f64, f64::max);
        for s in &track.samples {
            if s.width <= 0.0 {
                report.entries.push(Violation::BoundViolation {
                    vehicle_id: *id,
                    frame: s.frame,
                    field: "width".into(),
                    value: s.width,
                });
            }
            if s.height <= 0.0 {
                report.entries.push(Violation::BoundViolation {
                    vehicle_id: *id,
                    frame: s.frame,
                    field: "height".into(),
                    value: s.height,
                });
            }
            if ts.meta.lane_center(s.lane_id).is_none() {
                report.entries.push(Violation::UnknownLane {
                    vehicle_id: *id,
                    frame: s.frame,
                    lane_id: s.lane_id,
                });
            }
        }
        for pair in track.samples.windows(2) {
            let checks = [
                ('x', pair[1].x - pair[0].x, 3.0 * vmax_x * dt),
                ('y', pair[1].y - pair[0].y, 3.0 * vmax_y * dt),
            ];
            for (axis, delta, bound) in checks {
                if delta.abs() > bound + 1e-9 {
                    report.entries.push(Violation::KinematicJump {
                        vehicle_id: *id,
                        frame: pair[1].frame,
                        axis,
                        delta,
                        bound,
                    });
                }
            }
        }
    }
    report
}
