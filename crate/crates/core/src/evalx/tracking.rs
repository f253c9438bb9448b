use serde::{Deserialize, Serialize};

use super::metrics::{euclid_errors, ErrorSeries, MetricsRecord};
use crate::error::{Error, Result};
use crate::geom::{Position2D, Trajectory, TrajectorySample};
use crate::locate::{track, TrackResult};
use crate::recovery::{recover_frames, RecoveryModel};
use crate::rfsim::{
    analytic_dehop, eavesdropper_view, frames_from_reads, Dataset, PhaseFrame, TagRead,
};

/// Which phases the tracker is fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackMode {
    /// Hopped reads de-hopped by the recovery network (the system path).
    Recovered,
    /// Hopped reads de-hopped with the simulator's true distances (oracle).
    Analytic,
    /// Hopped reads with channel identities stripped, no recovery.
    Eavesdropper,
}

impl TrackMode {
    pub const NAMES: [&'static str; 3] = ["recovered", "analytic", "eavesdropper"];

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "recovered" => Ok(TrackMode::Recovered),
            "analytic" => Ok(TrackMode::Analytic),
            "eavesdropper" => Ok(TrackMode::Eavesdropper),
            _ => Err(Error::Unknown {
                what: "tracking mode",
                name: name.into(),
            }),
        }
    }
}

/// One trajectory's reads (tick-major) and true path.
pub fn trajectory_streams(ds: &Dataset) -> Result<Vec<(usize, Vec<TagRead>, Trajectory)>> {
    let mut out = Vec::new();
    for windows in ds.trajectories() {
        let Some(first) = windows.first() else {
            continue;
        };
        let reads: Vec<TagRead> = windows
            .iter()
            .flat_map(|w| w.reads.iter().copied())
            .collect();
        let truth: Vec<TrajectorySample> = windows
            .iter()
            .flat_map(|w| w.truth.iter().copied())
            .collect();
        out.push((first.trajectory_id, reads, Trajectory::new(truth)?));
    }
    if out.is_empty() {
        return Err(Error::Empty("dataset has no trajectories".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrackedTrajectory {
    pub trajectory_id: usize,
    /// Reference-frequency frames the tracker consumed.
    pub frames: Vec<PhaseFrame>,
    pub result: TrackResult,
    pub truth: Trajectory,
    pub errors: ErrorSeries,
}

/// Tracks every trajectory of `ds` in the given mode.
pub fn track_dataset(
    ds: &Dataset,
    mode: TrackMode,
    model: Option<&RecoveryModel>,
) -> Result<Vec<TrackedTrajectory>> {
    let cfg = &ds.manifest.config;
    let n = cfg.n_antennas();
    let schedule = ds.schedule()?;
    let window_len = ds.manifest.window_len;
    let mut out = Vec::new();
    for (trajectory_id, reads, truth) in trajectory_streams(ds)? {
        let frames = match mode {
            TrackMode::Recovered => {
                let model = model
                    .ok_or_else(|| Error::Config("recovered tracking needs a model".into()))?;
                model.check_compatible(cfg)?;
                let hopped = frames_from_reads(&reads, n, &cfg.channel_plan, cfg.f_ref)?;
                recover_frames(model, &hopped, window_len, cfg.f_ref)?
            }
            TrackMode::Analytic => {
                let dehopped = analytic_dehop(&reads, &truth, cfg, &schedule, &ds.manifest.preset)?;
                frames_from_reads(&dehopped, n, &cfg.channel_plan, cfg.f_ref)?
            }
            TrackMode::Eavesdropper => {
                frames_from_reads(&eavesdropper_view(&reads), n, &cfg.channel_plan, cfg.f_ref)?
            }
        };
        let result = track(&frames, cfg)?;
        let errors = euclid_errors(&result.trajectory, &truth)?;
        out.push(TrackedTrajectory {
            trajectory_id,
            frames,
            result,
            truth,
            errors,
        });
    }
    Ok(out)
}

/// Errors and metrics pooled over a set of predicted trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEval {
    pub metrics: MetricsRecord,
    /// Median Euclidean error, metres.
    pub median_r: f64,
    pub errors: ErrorSeries,
}

impl PooledEval {
    pub fn from_pairs(
        pred: &[Position2D],
        truth: &[Position2D],
        errors: ErrorSeries,
    ) -> Result<Self> {
        Ok(PooledEval {
            metrics: MetricsRecord::from_positions(pred, truth)?,
            median_r: errors.median_r()?,
            errors,
        })
    }

    pub fn from_trajectories(pairs: &[(Trajectory, Trajectory)]) -> Result<Self> {
        let mut errors = ErrorSeries::default();
        let (mut pred, mut truth) = (Vec::new(), Vec::new());
        for (p, t) in pairs {
            errors.extend(&euclid_errors(p, t)?);
            pred.extend(p.positions());
            truth.extend(t.positions());
        }
        Self::from_pairs(&pred, &truth, errors)
    }
}

pub fn evaluate_tracking(
    ds: &Dataset,
    mode: TrackMode,
    model: Option<&RecoveryModel>,
) -> Result<PooledEval> {
    let tracked = track_dataset(ds, mode, model)?;
    let pairs: Vec<(Trajectory, Trajectory)> = tracked
        .into_iter()
        .map(|t| (t.result.trajectory, t.truth))
        .collect();
    PooledEval::from_trajectories(&pairs)
}
