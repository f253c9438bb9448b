//! Seeded localization and tracking experiments shared by the integration
//! tests and the acceptance run.

use hopscatter::locate::{initial_position, track};
use hopscatter::rfsim::{
    analytic_dehop, circle, frames_from_reads, line, make_hop_schedule, random_gesture,
    simulate_reads, stationary, GestureParams, PhaseFrame, ScenarioPreset,
};
use hopscatter::rng::seeded_rng;
use hopscatter::{Position2D, SystemConfig, Trajectory};
use rand::Rng;

/// Hopped reads of `traj`, de-hopped with the channel known, as frames.
pub fn dehopped_frames(
    traj: &Trajectory,
    cfg: &SystemConfig,
    preset: &ScenarioPreset,
    seed: u64,
) -> Vec<PhaseFrame> {
    let schedule = make_hop_schedule(cfg.seed, cfg.channel_plan, cfg.slot_duration).unwrap();
    let reads = simulate_reads(
        traj,
        cfg,
        &schedule,
        preset,
        cfg.read_rate,
        &mut seeded_rng(seed, "reads"),
    )
    .unwrap();
    let dehopped = analytic_dehop(&reads, traj, cfg, &schedule, preset).unwrap();
    frames_from_reads(&dehopped, cfg.n_antennas(), &cfg.channel_plan, cfg.f_ref).unwrap()
}

/// Frames inside the initial-localization window (two hop slots).
pub fn initial_window(frames: &[PhaseFrame], cfg: &SystemConfig) -> usize {
    let end = frames[0].t + 2.0 * cfg.slot_duration - 1e-9;
    frames.iter().take_while(|f| f.t < end).count()
}

/// Initial-position errors (m) for `n` random stationary tags, noise-free.
pub fn noiseless_initial_errors(n: usize, seed: u64) -> Vec<f64> {
    let cfg = SystemConfig::default();
    let ws = cfg.workspace;
    let mut rng = seeded_rng(seed, "tag-positions");
    (0..n as u64)
        .map(|i| {
            let p = Position2D::new(
                rng.random_range(ws.x_min..ws.x_max),
                rng.random_range(ws.y_min..ws.y_max),
            );
            let traj = stationary(p, 2.0 * cfg.slot_duration, cfg.read_rate).unwrap();
            let frames = dehopped_frames(&traj, &cfg, &ScenarioPreset::ideal(), i);
            let (est, _) = initial_position(&frames, &cfg).unwrap();
            est.position.distance(&p)
        })
        .collect()
}

/// Initial-position errors (m) at the start of `n` random gestures under the
/// heavy-noise preset.
pub fn noisy_initial_errors(n: usize, seed: u64) -> Vec<f64> {
    let cfg = SystemConfig::default();
    (0..n as u64)
        .map(|i| {
            let g = random_gesture(
                &GestureParams::default(),
                &cfg.workspace,
                &mut seeded_rng(seed + i, "gesture"),
            )
            .unwrap();
            let frames = dehopped_frames(&g, &cfg, &ScenarioPreset::noisy(), seed + i);
            let k = initial_window(&frames, &cfg);
            let (est, _) = initial_position(&frames[..k], &cfg).unwrap();
            est.position.distance(&g.samples()[0].p)
        })
        .collect()
}

pub struct RoundTrip {
    pub name: &'static str,
    pub rmse: f64,
    pub max: f64,
}

/// Noise-free tracking of a 0.2 m/s line and an r = 0.1 m circle.
pub fn noiseless_round_trips() -> Vec<RoundTrip> {
    let cfg = SystemConfig::default();
    [
        (
            "line",
            line(Position2D::new(0.3, 0.4), [0.2, 0.0], 2.0, cfg.read_rate).unwrap(),
        ),
        (
            "circle",
            circle(Position2D::new(0.5, 0.6), 0.1, 2.0, 2.0, cfg.read_rate).unwrap(),
        ),
    ]
    .into_iter()
    .map(|(name, traj)| {
        let frames = dehopped_frames(&traj, &cfg, &ScenarioPreset::ideal(), 3);
        let res = track(&frames, &cfg).unwrap();
        let e: Vec<f64> = res
            .trajectory
            .positions()
            .zip(traj.positions())
            .map(|(a, b)| a.distance(&b))
            .collect();
        RoundTrip {
            name,
            rmse: (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt(),
            max: e.iter().copied().fold(0.0, f64::max),
        }
    })
    .collect()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
