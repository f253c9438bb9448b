use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::geom::{
    phase_distance_unchecked, signed_wrap, wrap_unchecked, Position2D, WorkspaceGrid,
};
use crate::rfsim::{theoretical_phase_unchecked, PhaseFrame};

/// Antenna pairs `(i, i + 1)`.
pub fn adjacent_pairs(n_antennas: usize) -> Vec<(usize, usize)> {
    (1..n_antennas).map(|i| (i - 1, i)).collect()
}

/// Measured phase differences `θ_j − θ_i` for every adjacent pair at one
/// frequency, with the share of reads that contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub freq: f64,
    pub weight: f64,
    pub diffs: Vec<f64>,
}

impl Snapshot {
    pub fn from_phases(phases: &[f64], freq: f64) -> Snapshot {
        Snapshot {
            freq,
            weight: 1.0,
            diffs: adjacent_pairs(phases.len())
                .into_iter()
                .map(|(i, j)| wrap_unchecked(phases[j] - phases[i]))
                .collect(),
        }
    }
}

/// Circular mean of the pair differences, one snapshot per distinct frequency.
pub fn snapshots_from_frames(frames: &[PhaseFrame]) -> Result<Vec<Snapshot>> {
    if frames.is_empty() {
        return Err(Error::Empty("no frames for initial localization".into()));
    }
    let n = frames[0].phases.len();
    if n < 2 {
        return Err(Error::Coverage(
            "need reads from at least 2 antennas".into(),
        ));
    }
    let pairs = adjacent_pairs(n);
    // (freq, count, Σsin, Σcos per pair) in order of first appearance
    let mut groups: Vec<(f64, usize, Vec<(f64, f64)>)> = Vec::new();
    for f in frames {
        if f.phases.len() != n {
            return Err(Error::Coverage(format!(
                "frame at t = {} has {} antennas, expected {n}",
                f.t,
                f.phases.len()
            )));
        }
        let idx = match groups.iter().position(|g| g.0 == f.freq) {
            Some(i) => i,
            None => {
                groups.push((f.freq, 0, vec![(0.0, 0.0); pairs.len()]));
                groups.len() - 1
            }
        };
        let g = &mut groups[idx];
        g.1 += 1;
        for (acc, &(i, j)) in g.2.iter_mut().zip(&pairs) {
            let d = f.phases[j] - f.phases[i];
            acc.0 += d.sin();
            acc.1 += d.cos();
        }
    }
    let total = frames.len() as f64;
    Ok(groups
        .into_iter()
        .map(|(freq, count, sums)| Snapshot {
            freq,
            weight: count as f64 / total,
            diffs: sums
                .iter()
                .map(|&(s, c)| wrap_unchecked(s.atan2(c)))
                .collect(),
        })
        .collect())
}

#[inline]
fn kernel(residual: f64, sigma: f64) -> f64 {
    (-residual * residual / (2.0 * sigma * sigma)).exp()
}

/// Confidence that the tag sits at `p`:
/// `V(p) = Σ_snapshots w · Σ_pairs exp(−d(Δθ_meas, Δθ_theo(p))² / 2σ²)`.
///
/// With one snapshot of weight 1 this is the plain per-pair kernel sum, so a
/// perfect match scores the number of pairs.
pub fn confidence(p: &Position2D, measured: &[Snapshot], cfg: &SystemConfig) -> f64 {
    let dists: Vec<f64> = cfg.antennas.iter().map(|a| p.distance(a)).collect();
    confidence_from_distances(&dists, measured, cfg.kernel_sigma)
}

fn confidence_from_distances(dists: &[f64], measured: &[Snapshot], sigma: f64) -> f64 {
    let pairs = adjacent_pairs(dists.len());
    measured
        .iter()
        .map(|s| {
            let theo: Vec<f64> = dists
                .iter()
                .map(|&d| theoretical_phase_unchecked(d, s.freq))
                .collect();
            s.weight
                * pairs
                    .iter()
                    .zip(&s.diffs)
                    .map(|(&(i, j), &m)| {
                        kernel(phase_distance_unchecked(m, theo[j] - theo[i]), sigma)
                    })
                    .sum::<f64>()
        })
        .sum()
}

/// `V` evaluated at every grid node, x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    pub grid: WorkspaceGrid,
    pub values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn compute(measured: &[Snapshot], cfg: &SystemConfig) -> ConfidenceMap {
        let grid = cfg.workspace;
        let values = grid
            .nodes()
            .map(|p| confidence(&p, measured, cfg))
            .collect();
        ConfidenceMap { grid, values }
    }

    /// Index of the highest value; ties go to the lowest x, then lowest y.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Highest value among nodes farther than `exclusion` from node `idx`.
    pub fn runner_up(&self, idx: usize, exclusion: f64) -> Option<f64> {
        let center = self.grid.node_at(idx);
        self.values
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.grid.node_at(i).distance(&center) > exclusion)
            .map(|(_, &v)| v)
            .reduce(f64::max)
    }

    /// `x,y,v` rows for external heat-map plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,v\n");
        for (p, v) in self.grid.nodes().zip(&self.values) {
            let _ = writeln!(out, "{},{},{}", p.x, p.y, v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialEstimate {
    /// Refined estimate at the time of the first frame.
    pub position: Position2D,
    /// Grid node with the highest confidence.
    pub grid_node: Position2D,
    /// Confidence at `grid_node`.
    pub v: f64,
    /// `v` minus the best confidence outside the peak's neighborhood.
    pub runner_up_gap: f64,
}

/// Nodes closer than this to the argmax count as the same peak.
pub const RUNNER_UP_EXCLUSION: f64 = 0.02;
const REFINE_ITERS: usize = 30;

/// Grid search for the highest-confidence node over the first frames, then
/// local refinement of `V` around it.
///
/// The refinement compensates for motion inside the window: displacements
/// relative to the first frame are taken from phase-difference tracking and
/// each frame's measurement is scored at its displaced position.
pub fn initial_position(
    frames: &[PhaseFrame],
    cfg: &SystemConfig,
) -> Result<(InitialEstimate, ConfidenceMap)> {
    let n = cfg.n_antennas();
    if let Some(f) = frames.iter().find(|f| f.phases.len() != n) {
        return Err(Error::Coverage(format!(
            "frame at t = {} carries {} antennas, configuration has {n}",
            f.t,
            f.phases.len()
        )));
    }
    let snapshots = snapshots_from_frames(frames)?;
    let map = ConfidenceMap::compute(&snapshots, cfg);
    let best = map.argmax();
    let grid_node = map.grid.node_at(best);
    let v = map.values[best];
    let runner_up_gap = map
        .runner_up(best, RUNNER_UP_EXCLUSION)
        .map_or(v, |r| v - r);

    let motion = relative_motion(frames, grid_node, cfg);
    let per_frame: Vec<(Snapshot, Position2D)> = frames
        .iter()
        .zip(&motion)
        .map(|(f, &d)| (Snapshot::from_phases(&f.phases, f.freq), d))
        .collect();
    let position = refine(grid_node, &per_frame, cfg);
    Ok((
        InitialEstimate {
            position,
            grid_node,
            v,
            runner_up_gap,
        },
        map,
    ))
}

/// Displacement of each frame relative to the first, from unwrapped phase
/// changes at each frame's own frequency.
fn relative_motion(
    frames: &[PhaseFrame],
    start: Position2D,
    cfg: &SystemConfig,
) -> Vec<Position2D> {
    let mut out = vec![Position2D::default(); frames.len()];
    let mut ranges: Vec<f64> = cfg.antennas.iter().map(|a| start.distance(a)).collect();
    let mut p = start;
    for k in 1..frames.len() {
        let (prev, cur) = (&frames[k - 1], &frames[k]);
        if prev.freq != cur.freq {
            // phase jumps across a hop are not motion; hold the displacement
            out[k] = out[k - 1];
            continue;
        }
        for (r, (a, b)) in ranges.iter_mut().zip(prev.phases.iter().zip(&cur.phases)) {
            *r += signed_wrap(b - a) * SPEED_OF_LIGHT / (2.0 * TAU * cur.freq);
        }
        if let Ok(next) =
            super::tracker::solve_ranges(p, &ranges, &cfg.antennas, Some(&cfg.workspace))
        {
            p = next;
        }
        out[k] = Position2D::new(p.x - start.x, p.y - start.y);
    }
    out
}

fn motion_compensated_v(
    p0: Position2D,
    per_frame: &[(Snapshot, Position2D)],
    cfg: &SystemConfig,
) -> f64 {
    let n = per_frame.len() as f64;
    per_frame
        .iter()
        .map(|(s, d)| confidence(&p0.offset(d.x, d.y), std::slice::from_ref(s), cfg))
        .sum::<f64>()
        / n
}

/// Iteratively reweighted Gauss–Newton ascent of the motion-compensated `V`.
fn refine(
    start: Position2D,
    per_frame: &[(Snapshot, Position2D)],
    cfg: &SystemConfig,
) -> Position2D {
    let sigma = cfg.kernel_sigma;
    let pairs = adjacent_pairs(cfg.n_antennas());
    let mut p = start;
    let mut v = motion_compensated_v(p, per_frame, cfg);
    for _ in 0..REFINE_ITERS {
        // normal equations of Σ w r² with w = exp(−r²/2σ²)
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (s, d) in per_frame {
            let q = p.offset(d.x, d.y);
            let scale = 2.0 * TAU * s.freq / SPEED_OF_LIGHT;
            let units: Vec<(f64, f64, f64)> = cfg
                .antennas
                .iter()
                .map(|a| {
                    let dist = q.distance(a);
                    ((q.x - a.x) / dist, (q.y - a.y) / dist, dist)
                })
                .collect();
            for (&(i, j), &m) in pairs.iter().zip(&s.diffs) {
                let theo = theoretical_phase_unchecked(units[j].2, s.freq)
                    - theoretical_phase_unchecked(units[i].2, s.freq);
                let r = signed_wrap(m - theo);
                let w = kernel(r, sigma);
                let gx = scale * (units[j].0 - units[i].0);
                let gy = scale * (units[j].1 - units[i].1);
                a11 += w * gx * gx;
                a12 += w * gx * gy;
                a22 += w * gy * gy;
                b1 += w * gx * r;
                b2 += w * gy * r;
            }
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-300) {
            break;
        }
        let mut dx = (a22 * b1 - a12 * b2) / det;
        let mut dy = (a11 * b2 - a12 * b1) / det;
        let mut accepted = false;
        for _ in 0..20 {
            let cand = cfg.workspace.clamp(p.offset(dx, dy));
            let cv = motion_compensated_v(cand, per_frame, cfg);
            if cv >= v {
                let moved = cand.distance(&p);
                p = cand;
                v = cv;
                accepted = moved > 0.0;
                break;
            }
            dx *= 0.5;
            dy *= 0.5;
        }
        if !accepted || dx.hypot(dy) < 1e-12 {
            break;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfsim::theoretical_phase;

    fn frame_at(p: Position2D, cfg: &SystemConfig, t: f64) -> PhaseFrame {
        let phases: Vec<f64> = cfg
            .antennas
            .iter()
            .map(|a| theoretical_phase(&p, a, cfg.f_ref).unwrap())
            .collect();
        PhaseFrame {
            t,
            freq: cfg.f_ref,
            channel: None,
            rssi: vec![-50.0; phases.len()],
            phases,
        }
    }

    #[test]
    fn perfect_match_scores_pair_count() {
        let cfg = SystemConfig::default();
        let p = Position2D::new(0.37, 0.61);
        let snap = snapshots_from_frames(&[frame_at(p, &cfg, 0.0)]).unwrap();
        assert!((confidence(&p, &snap, &cfg) - 3.0).abs() < 1e-12);
        let mut wide = cfg.clone();
        wide.kernel_sigma = 1e6;
        for q in [Position2D::new(0.0, 0.1), Position2D::new(0.9, 0.9)] {
            assert!((confidence(&q, &snap, &wide) - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn truth_node_beats_every_other_node() {
        let cfg = SystemConfig::default();
        let p = Position2D::new(0.30, 0.40);
        let snap = snapshots_from_frames(&[frame_at(p, &cfg, 0.0)]).unwrap();
        let map = ConfidenceMap::compute(&snap, &cfg);
        let at_truth = confidence(&p, &snap, &cfg);
        let mut others = 0;
        for (q, &v) in cfg.workspace.nodes().zip(&map.values) {
            if q.distance(&p) > 1e-9 {
                assert!(v < at_truth, "node {q:?} scores {v} >= {at_truth}");
                others += 1;
            }
        }
        assert_eq!(others, cfg.workspace.node_count() - 1);
    }

    #[test]
    fn grid_node_truth_is_found_exactly() {
        let cfg = SystemConfig::default();
        let p = cfg.workspace.node(80, 120);
        let frames: Vec<_> = (0..8)
            .map(|k| frame_at(p, &cfg, k as f64 * 0.005))
            .collect();
        let (est, map) = initial_position(&frames, &cfg).unwrap();
        assert_eq!(est.grid_node, p);
        assert!(est.position.distance(&p) < 1e-9);
        assert_eq!(map.values.len(), cfg.workspace.node_count());
        assert!(est.runner_up_gap >= 0.0);
    }

    #[test]
    fn argmax_invariant_to_affine_rescaling() {
        let cfg = SystemConfig::default();
        let snap =
            snapshots_from_frames(&[frame_at(Position2D::new(0.66, 0.52), &cfg, 0.0)]).unwrap();
        let map = ConfidenceMap::compute(&snap, &cfg);
        let scaled = ConfidenceMap {
            grid: map.grid,
            values: map.values.iter().map(|v| 3.7 * v - 11.0).collect(),
        };
        assert_eq!(map.argmax(), scaled.argmax());
    }

    #[test]
    fn ties_break_to_lowest_x_then_y() {
        let grid = WorkspaceGrid {
            x_min: 0.0,
            x_max: 0.01,
            y_min: 0.0,
            y_max: 0.01,
            resolution: 0.005,
        };
        let map = ConfidenceMap {
            grid,
            values: vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        };
        assert_eq!(grid.node_at(map.argmax()), Position2D::new(0.0, 0.005));
    }

    #[test]
    fn missing_antenna_is_a_coverage_error() {
        let cfg = SystemConfig::default();
        let mut f = frame_at(Position2D::new(0.5, 0.5), &cfg, 0.0);
        f.phases.pop();
        assert!(matches!(
            initial_position(&[f], &cfg),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let mut cfg = SystemConfig::default();
        cfg.workspace.resolution = 0.1;
        let snap =
            snapshots_from_frames(&[frame_at(Position2D::new(0.5, 0.5), &cfg, 0.0)]).unwrap();
        let csv = ConfidenceMap::compute(&snap, &cfg).to_csv();
        assert_eq!(csv.lines().count(), 1 + 11 * 11);
    }
}
