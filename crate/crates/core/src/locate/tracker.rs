use std::f64::consts::TAU;

use log::warn;

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::geom::{signed_wrap, Position2D, Trajectory, TrajectorySample, WorkspaceGrid};
use crate::locate::confidence::{initial_position, InitialEstimate};
use crate::rfsim::PhaseFrame;

/// Largest accepted condition number of the 2×2 normal matrix.
pub const MAX_CONDITION: f64 = 1e8;
const GN_ITERS: usize = 3;

/// Sequential tracker state at the reference frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub position: Position2D,
    /// Last wrapped phase per antenna.
    pub phases: Vec<f64>,
    pub f_ref: f64,
    pub last_t: f64,
    antennas: Vec<Position2D>,
    /// Accumulated tag–antenna distance per antenna.
    ranges: Vec<f64>,
    bounds: Option<WorkspaceGrid>,
}

impl TrackerState {
    pub fn new(
        position: Position2D,
        phases: Vec<f64>,
        t: f64,
        f_ref: f64,
        antennas: &[Position2D],
    ) -> Result<Self> {
        if phases.len() != antennas.len() {
            return Err(Error::Shape(format!(
                "{} phases for {} antennas",
                phases.len(),
                antennas.len()
            )));
        }
        Ok(TrackerState {
            position,
            phases,
            f_ref,
            last_t: t,
            antennas: antennas.to_vec(),
            ranges: antennas.iter().map(|a| position.distance(a)).collect(),
            bounds: None,
        })
    }

    /// Keeps every tracked position inside `ws`.
    pub fn with_bounds(mut self, ws: WorkspaceGrid) -> Self {
        self.bounds = Some(ws);
        self
    }

    /// Accumulated ranges after unwrapping the phase change to `phases`.
    fn advanced_ranges(&self, phases: &[f64]) -> Vec<f64> {
        let scale = SPEED_OF_LIGHT / (2.0 * TAU * self.f_ref);
        let mut ranges = self.ranges.clone();
        for (r, (old, new)) in ranges.iter_mut().zip(self.phases.iter().zip(phases)) {
            *r += signed_wrap(new - old) * scale;
        }
        ranges
    }

    /// Consumes a tick without moving the position estimate.
    fn hold(&mut self, phases: &[f64], t: f64) {
        self.ranges = self.advanced_ranges(phases);
        self.phases.copy_from_slice(phases);
        self.last_t = t;
    }
}

/// Solves `|p − a_i| = r_i` in the least-squares sense by Gauss–Newton from
/// `p`. The first iteration is the linearized update `u_i · Δp = δd_i`.
/// With `bounds`, every iterate is clamped into the workspace.
pub(crate) fn solve_ranges(
    p: Position2D,
    ranges: &[f64],
    antennas: &[Position2D],
    bounds: Option<&WorkspaceGrid>,
) -> Result<Position2D> {
    let mut p = p;
    for _ in 0..GN_ITERS {
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (a, &r) in antennas.iter().zip(ranges) {
            let d = p.distance(a);
            if d == 0.0 {
                return Err(Error::Singular("tag coincides with an antenna".into()));
            }
            let (ux, uy) = ((p.x - a.x) / d, (p.y - a.y) / d);
            let res = r - d;
            a11 += ux * ux;
            a12 += ux * uy;
            a22 += uy * uy;
            b1 += ux * res;
            b2 += uy * res;
        }
        // eigenvalues of the symmetric normal matrix
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a12;
        let disc = ((a11 - a22).powi(2) + 4.0 * a12 * a12).sqrt();
        let (hi, lo) = (0.5 * (tr + disc), 0.5 * (tr - disc));
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(Error::Singular(format!(
                "antenna unit vectors are (nearly) parallel at ({:.4}, {:.4})",
                p.x, p.y
            )));
        }
        let dx = (a22 * b1 - a12 * b2) / det;
        let dy = (a11 * b2 - a12 * b1) / det;
        p = p.offset(dx, dy);
        if let Some(ws) = bounds {
            p = ws.clamp(p);
        }
        if dx.hypot(dy) < 1e-13 {
            break;
        }
    }
    Ok(p)
}

/// Advances the tracker by one tick of reference-frequency phases.
///
/// Each antenna's phase change is unwrapped into `(−π, π]` and converted to a
/// radial displacement `δd = Δθ · c / (4π f_ref)`; the position follows from
/// a least-squares fit to the accumulated ranges.
pub fn step_update(state: &mut TrackerState, phases: &[f64], t: f64) -> Result<Position2D> {
    if phases.len() != state.phases.len() {
        return Err(Error::Shape(format!(
            "{} phases for {} antennas",
            phases.len(),
            state.phases.len()
        )));
    }
    if !(t > state.last_t) {
        return Err(Error::Domain(format!(
            "timestamps must increase (t = {t} after {})",
            state.last_t
        )));
    }
    let ranges = state.advanced_ranges(phases);
    let mut p = solve_ranges(
        state.position,
        &ranges,
        &state.antennas,
        state.bounds.as_ref(),
    )?;
    if let Some(ws) = &state.bounds {
        p = ws.clamp(p);
    }
    state.position = p;
    state.ranges = ranges;
    state.phases.copy_from_slice(phases);
    state.last_t = t;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub trajectory: Trajectory,
    pub initial: InitialEstimate,
    /// Set when a gap longer than one hop slot separated two frames.
    pub wrap_risk: bool,
    pub warnings: Vec<String>,
}

/// Initial localization over the first two hop slots, then one tracker step
/// per frame. Frames must already be expressed at `cfg.f_ref`.
pub fn track(frames: &[PhaseFrame], cfg: &SystemConfig) -> Result<TrackResult> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Empty("no frames to track".into()))?;
    let window_end = first.t + 2.0 * cfg.slot_duration - 1e-9;
    let n_init = frames
        .iter()
        .take_while(|f| f.t < window_end)
        .count()
        .max(1);
    let (initial, _) = initial_position(&frames[..n_init], cfg)?;

    let mut state = TrackerState::new(
        initial.position,
        first.phases.clone(),
        first.t,
        cfg.f_ref,
        &cfg.antennas,
    )?
    .with_bounds(cfg.workspace);
    let mut samples = Vec::with_capacity(frames.len());
    samples.push(TrajectorySample {
        t: first.t,
        p: initial.position,
    });
    let mut wrap_risk = false;
    let mut warnings = Vec::new();
    for f in &frames[1..] {
        let gap = f.t - state.last_t;
        if gap > cfg.slot_duration {
            let msg = format!(
                "gap of {gap:.4} s before t = {:.4} exceeds the slot duration; phase unwrapping may slip",
                f.t
            );
            warn!("{msg}");
            warnings.push(msg);
            wrap_risk = true;
        }
        let p = match step_update(&mut state, &f.phases, f.t) {
            Ok(p) => p,
            Err(Error::Singular(why)) => {
                let msg = format!("holding position at t = {:.4}: {why}", f.t);
                warn!("{msg}");
                warnings.push(msg);
                state.hold(&f.phases, f.t);
                state.position
            }
            Err(e) => return Err(e),
        };
        samples.push(TrajectorySample { t: f.t, p });
    }
    Ok(TrackResult {
        trajectory: Trajectory::new(samples)?,
        initial,
        wrap_risk,
        warnings,
    })
}
