//! Trajectory geometry: track-file ingest, arc-length routes, conflict
//! points, and interaction scenarios (extracted from data or synthesized).

mod route;
mod scenario;
mod synth;
mod track;

pub use route::{
    assign_conflict_points, build_route, find_path_intersection, find_path_intersection_with,
    symmetric_intersection, Point, Route, DEFAULT_CONFLICT_THRESHOLD_M, DEFAULT_MERGE_THRESHOLD_M,
    DEFAULT_RESAMPLE_STEP_M,
};
pub use scenario::{
    extract_scenarios, load_scenario, load_scenario_dir, save_scenario, Arrival, PairingRules,
    Scenario, ScenarioId, SCENARIO_FORMAT_VERSION,
};
pub use synth::{desk_scenario_specs, synth_scenario, PathSpec, SpeedProfile, SynthSpec};
pub use track::{load_tracks, TrackRecord, TrackSchema};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("missing column {0:?} in track file header")]
    MissingColumn(String),
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("duplicate timestamp {timestamp_ms} ms for track {track_id}")]
    DuplicateTimestamp { track_id: i64, timestamp_ms: i64 },
    #[error("degenerate path: fewer than two distinct positions")]
    DegeneratePath,
    #[error("resample step must be positive, got {0}")]
    InvalidResampleStep(f64),
    #[error("routes neither cross nor merge within {threshold} m")]
    NoInteraction { threshold: f64 },
    #[error("conflict threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("no route point lies within {threshold} m of the intersection point")]
    NoConflictPoint { threshold: f64 },
    #[error("route has no conflict point assigned")]
    ConflictUnassigned,
    #[error("no qualifying interaction pairs found")]
    NoPairsFound,
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unsupported scenario format version {0}")]
    UnsupportedFormatVersion(u32),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
