//! Ground-truth trajectory generators, sampled at the read rate.

use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Position2D, Trajectory, WorkspaceGrid};
use crate::rng::Rng;

fn sample(duration: f64, rate: f64, f: impl Fn(f64) -> Position2D) -> Result<Trajectory> {
    if !(duration > 0.0 && rate > 0.0) {
        return Err(Error::Domain("duration and rate must be > 0".into()));
    }
    let n = (duration * rate).round().max(1.0) as usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
    let points: Vec<Position2D> = times.iter().map(|&t| f(t)).collect();
    Trajectory::from_points(&times, &points)
}

pub fn stationary(p: Position2D, duration: f64, rate: f64) -> Result<Trajectory> {
    sample(duration, rate, |_| p)
}

/// Constant velocity `[vx, vy]` m/s from `start`.
pub fn line(start: Position2D, velocity: [f64; 2], duration: f64, rate: f64) -> Result<Trajectory> {
    sample(duration, rate, |t| {
        start.offset(velocity[0] * t, velocity[1] * t)
    })
}

/// Counter-clockwise circle starting at angle 0.
pub fn circle(
    center: Position2D,
    radius: f64,
    period: f64,
    duration: f64,
    rate: f64,
) -> Result<Trajectory> {
    let w = TAU / period;
    sample(duration, rate, |t| {
        center.offset(radius * (w * t).cos(), radius * (w * t).sin())
    })
}

/// Ranges for randomly drawn Lissajous-style hand gestures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GestureParams {
    pub duration: f64,
    pub rate: f64,
    pub amplitude: [f64; 2],
    /// Angular frequency range, rad/s.
    pub omega: [f64; 2],
    /// Keep-out distance between the gesture envelope and the workspace edge.
    pub margin: f64,
}

impl Default for GestureParams {
    fn default() -> Self {
        GestureParams {
            duration: 2.0,
            rate: 200.0,
            amplitude: [0.03, 0.15],
            omega: [1.0, 4.0],
            margin: 0.1,
        }
    }
}

impl GestureParams {
    /// Upper bound on speed, m/s.
    pub fn max_speed(&self) -> f64 {
        self.amplitude[1] * self.omega[1] * std::f64::consts::SQRT_2
    }
}

/// Independent sinusoid per axis, centered so the whole gesture stays inside
/// the workspace shrunk by `margin`.
pub fn random_gesture(
    params: &GestureParams,
    ws: &WorkspaceGrid,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let reach = params.amplitude[1] + params.margin;
    let (cx_lo, cx_hi) = (ws.x_min + reach, ws.x_max - reach);
    let (cy_lo, cy_hi) = (ws.y_min + reach, ws.y_max - reach);
    if cx_lo >= cx_hi || cy_lo >= cy_hi {
        return Err(Error::Config(
            "workspace too small for the gesture amplitude".into(),
        ));
    }
    let center = Position2D::new(
        rng.random_range(cx_lo..cx_hi),
        rng.random_range(cy_lo..cy_hi),
    );
    let mut axis = || {
        (
            rng.random_range(params.amplitude[0]..params.amplitude[1]),
            rng.random_range(params.omega[0]..params.omega[1]),
            rng.random_range(0.0..TAU),
        )
    };
    let (ax, wx, px) = axis();
    let (ay, wy, py) = axis();
    // start the motion at the center offset so t = 0 is not special
    sample(params.duration, params.rate, |t| {
        center.offset(ax * (wx * t + px).sin(), ay * (wy * t + py).sin())
    })
}
