//! Planar geometry, wrapped-angle arithmetic and the candidate grid.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the tracking plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Position2D {
    fn from([x, y]: [f64; 2]) -> Self {
        Position2D { x, y }
    }
}

impl From<Position2D> for [f64; 2] {
    fn from(p: Position2D) -> Self {
        [p.x, p.y]
    }
}

impl Position2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Position2D { x, y }
    }

    pub fn distance(&self, other: &Position2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Position2D {
        Position2D::new(self.x + dx, self.y + dy)
    }
}

fn check_finite(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("angle must be finite, got {theta}")))
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> Result<f64> {
    check_finite(theta)?;
    Ok(wrap_unchecked(theta))
}

/// `wrap_phase` for callers that already guarantee finiteness.
#[inline]
pub(crate) fn wrap_unchecked(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(−π, π]`.
#[inline]
pub fn signed_wrap(theta: f64) -> f64 {
    let w = wrap_unchecked(theta);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Shortest angular separation between two phases, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> Result<f64> {
    check_finite(a)?;
    check_finite(b)?;
    Ok(phase_distance_unchecked(a, b))
}

#[inline]
pub(crate) fn phase_distance_unchecked(a: f64, b: f64) -> f64 {
    let w = wrap_unchecked(a - b);
    w.min(TAU - w)
}

/// One timestamped point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub p: Position2D,
}

/// Non-empty, strictly time-ordered sequence of positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TrajectorySample>", into = "Vec<TrajectorySample>")]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl TryFrom<Vec<TrajectorySample>> for Trajectory {
    type Error = Error;

    fn try_from(samples: Vec<TrajectorySample>) -> Result<Self> {
        Trajectory::new(samples)
    }
}

impl From<Trajectory> for Vec<TrajectorySample> {
    fn from(t: Trajectory) -> Self {
        t.samples
    }
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("trajectory has no samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || !s.p.is_finite() {
                return Err(Error::Domain(format!(
                    "trajectory sample {i} is not finite"
                )));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::Domain(format!(
                "trajectory timestamps must increase strictly (sample {} at t={} follows t={})",
                i + 1,
                samples[i + 1].t,
                samples[i].t
            )));
        }
        Ok(Trajectory { samples })
    }

    pub fn from_points(times: &[f64], points: &[Position2D]) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::Shape(format!(
                "{} timestamps for {} points",
                times.len(),
                points.len()
            )));
        }
        Trajectory::new(
            times
                .iter()
                .zip(points)
                .map(|(&t, &p)| TrajectorySample { t, p })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn positions(&self) -> impl Iterator<Item = Position2D> + '_ {
        self.samples.iter().map(|s| s.p)
    }

    /// Linear interpolation, clamped to the end points.
    pub fn position_at(&self, t: f64) -> Position2D {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].p;
        }
        if t >= s[s.len() - 1].t {
            return s[s.len() - 1].p;
        }
        let hi = s.partition_point(|x| x.t <= t);
        let (a, b) = (&s[hi - 1], &s[hi]);
        let w = (t - a.t) / (b.t - a.t);
        Position2D::new(a.p.x + w * (b.p.x - a.p.x), a.p.y + w * (b.p.y - a.p.y))
    }

    /// Same samples shifted by `dt` seconds.
    pub fn shifted(&self, dt: f64) -> Trajectory {
        Trajectory {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample {
                    t: s.t + dt,
                    p: s.p,
                })
                .collect(),
        }
    }
}

/// Rectangular candidate grid for initial localization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution: f64,
}

impl Default for WorkspaceGrid {
    fn default() -> Self {
        WorkspaceGrid {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.1,
            y_max: 1.1,
            resolution: 0.005,
        }
    }
}

fn axis_count(span: f64, res: f64) -> usize {
    let q = span / res;
    let steps = if (q - q.round()).abs() < 1e-9 {
        q.round()
    } else {
        q.ceil()
    };
    steps as usize + 1
}

impl WorkspaceGrid {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.x_min,
            self.x_max,
            self.y_min,
            self.y_max,
            self.resolution,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("workspace bounds must be finite".into()));
        }
        if self.resolution <= 0.0 {
            return Err(Error::Config("workspace resolution must be > 0".into()));
        }
        if self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::Config(
                "workspace needs max > min on both axes".into(),
            ));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        axis_count(self.x_max - self.x_min, self.resolution)
    }

    pub fn ny(&self) -> usize {
        axis_count(self.y_max - self.y_min, self.resolution)
    }

    pub fn node_count(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Node `(i, j)`; the last node on each axis is clamped to the bound.
    pub fn node(&self, i: usize, j: usize) -> Position2D {
        Position2D::new(
            (self.x_min + i as f64 * self.resolution).min(self.x_max),
            (self.y_min + j as f64 * self.resolution).min(self.y_max),
        )
    }

    /// Flat index → node, x-major (all y for the lowest x first).
    pub fn node_at(&self, flat: usize) -> Position2D {
        let ny = self.ny();
        self.node(flat / ny, flat % ny)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Position2D> + '_ {
        let (nx, ny) = (self.nx(), self.ny());
        (0..nx).flat_map(move |i| (0..ny).map(move |j| self.node(i, j)))
    }

    pub fn contains(&self, p: &Position2D) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn clamp(&self, p: Position2D) -> Position2D {
        Position2D::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
        )
    }

    pub fn center(&self) -> Position2D {
        Position2D::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }
}
