//! Two-stage tracking: grid search for the starting point, then
//! incremental phase-difference tracking.

mod confidence;
mod tracker;

pub use confidence::{
    adjacent_pairs, confidence, initial_position, snapshots_from_frames, ConfidenceMap,
    InitialEstimate, Snapshot,
};
pub use tracker::{step_update, track, TrackResult, TrackerState};
