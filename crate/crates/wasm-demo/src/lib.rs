//! WebAssembly bindings for a single-page demo (see `www/index.html`).
//!
//! Three operations: the initial-localization confidence map for a tag the
//! user places, a legitimate-versus-eavesdropper tracking comparison on a
//! random gesture, and a slice of the deployment's hop schedule. The plain
//! Rust functions are usable (and tested) natively; the `wasm_bindgen`
//! wrappers only convert errors.

use wasm_bindgen::prelude::*;

use hopscatter::evalx::{euclid_errors, median};
use hopscatter::locate::{initial_position, track};
use hopscatter::rfsim::{
    analytic_dehop, eavesdropper_view, frames_from_reads, make_hop_schedule, random_gesture,
    simulate_reads, stationary, GestureParams, PhaseFrame, ScenarioPreset,
};
use hopscatter::rng::seeded_rng;
use hopscatter::{Position2D, Result, SystemConfig, Trajectory};

fn js_err(e: hopscatter::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn preset(phase_noise: f64) -> ScenarioPreset {
    ScenarioPreset {
        name: "demo".into(),
        phase_noise_sigma: phase_noise,
        ..ScenarioPreset::dataset1()
    }
}

fn dehopped(
    traj: &Trajectory,
    cfg: &SystemConfig,
    preset: &ScenarioPreset,
    seed: u64,
) -> Result<Vec<PhaseFrame>> {
    let schedule = make_hop_schedule(cfg.seed, cfg.channel_plan, cfg.slot_duration)?;
    let reads = simulate_reads(
        traj,
        cfg,
        &schedule,
        preset,
        cfg.read_rate,
        &mut seeded_rng(seed, "demo-reads"),
    )?;
    let clean = analytic_dehop(&reads, traj, cfg, &schedule, preset)?;
    frames_from_reads(&clean, cfg.n_antennas(), &cfg.channel_plan, cfg.f_ref)
}

fn interleave(t: &Trajectory) -> Vec<f64> {
    t.positions().flat_map(|p| [p.x, p.y]).collect()
}

/// Geometry for drawing: workspace bounds then antenna coordinates.
#[wasm_bindgen]
pub struct Layout {
    bounds: Vec<f64>,
    antennas: Vec<f64>,
}

#[wasm_bindgen]
impl Layout {
    /// `[x_min, x_max, y_min, y_max]`, metres.
    #[wasm_bindgen(getter)]
    pub fn bounds(&self) -> Vec<f64> {
        self.bounds.clone()
    }

    /// Interleaved `x, y` per antenna.
    #[wasm_bindgen(getter)]
    pub fn antennas(&self) -> Vec<f64> {
        self.antennas.clone()
    }
}

#[wasm_bindgen]
pub fn layout() -> Layout {
    let cfg = SystemConfig::default();
    let w = cfg.workspace;
    Layout {
        bounds: vec![w.x_min, w.x_max, w.y_min, w.y_max],
        antennas: cfg.antennas.iter().flat_map(|a| [a.x, a.y]).collect(),
    }
}

/// Confidence over the workspace grid plus the resulting estimate.
#[wasm_bindgen]
pub struct HeatMap {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    estimate: [f64; 2],
    error_mm: f64,
}

#[wasm_bindgen]
impl HeatMap {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[wasm_bindgen(getter)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Confidence per node, x-major (`values[i * ny + j]`).
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> Vec<f64> {
        self.estimate.to_vec()
    }

    #[wasm_bindgen(getter)]
    pub fn error_mm(&self) -> f64 {
        self.error_mm
    }
}

/// Simulates two hop slots of reads from a stationary tag at `(x, y)` and
/// scores every grid node.
pub fn heatmap(x: f64, y: f64, phase_noise: f64, seed: u64) -> Result<HeatMap> {
    let cfg = SystemConfig::default();
    let tag = cfg.workspace.clamp(Position2D::new(x, y));
    let traj = stationary(tag, 2.0 * cfg.slot_duration, cfg.read_rate)?;
    let frames = dehopped(&traj, &cfg, &preset(phase_noise), seed)?;
    let (est, map) = initial_position(&frames, &cfg)?;
    Ok(HeatMap {
        nx: map.grid.nx(),
        ny: map.grid.ny(),
        values: map.values,
        estimate: [est.position.x, est.position.y],
        error_mm: est.position.distance(&tag) * 1e3,
    })
}

#[wasm_bindgen(js_name = confidenceHeatmap)]
pub fn confidence_heatmap(
    x: f64,
    y: f64,
    phase_noise: f64,
    seed: u32,
) -> std::result::Result<HeatMap, JsError> {
    heatmap(x, y, phase_noise, seed.into()).map_err(js_err)
}

/// True, legitimately tracked and eavesdropped paths of one gesture.
#[wasm_bindgen]
pub struct TrackComparison {
    truth: Vec<f64>,
    legitimate: Vec<f64>,
    eavesdropper: Vec<f64>,
    legitimate_median_mm: f64,
    eavesdropper_median_mm: f64,
}

#[wasm_bindgen]
impl TrackComparison {
    /// Interleaved `x, y` per tick.
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<f64> {
        self.truth.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn legitimate(&self) -> Vec<f64> {
        self.legitimate.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn eavesdropper(&self) -> Vec<f64> {
        self.eavesdropper.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn legitimate_median_mm(&self) -> f64 {
        self.legitimate_median_mm
    }

    #[wasm_bindgen(getter)]
    pub fn eavesdropper_median_mm(&self) -> f64 {
        self.eavesdropper_median_mm
    }
}

/// Tracks one random gesture twice: from channel-aware de-hopped phases
/// (the legitimate reader, who knows the schedule) and from the hopped phases
/// with channel identities stripped (an eavesdropper).
pub fn tracks(seed: u64, phase_noise: f64) -> Result<TrackComparison> {
    let cfg = SystemConfig::default();
    let preset = preset(phase_noise);
    let truth = random_gesture(
        &GestureParams::default(),
        &cfg.workspace,
        &mut seeded_rng(seed, "demo-gesture"),
    )?;
    let schedule = make_hop_schedule(cfg.seed, cfg.channel_plan, cfg.slot_duration)?;
    let reads = simulate_reads(
        &truth,
        &cfg,
        &schedule,
        &preset,
        cfg.read_rate,
        &mut seeded_rng(seed, "demo-reads"),
    )?;
    let n = cfg.n_antennas();
    let legit_frames = frames_from_reads(
        &analytic_dehop(&reads, &truth, &cfg, &schedule, &preset)?,
        n,
        &cfg.channel_plan,
        cfg.f_ref,
    )?;
    let eaves_frames =
        frames_from_reads(&eavesdropper_view(&reads), n, &cfg.channel_plan, cfg.f_ref)?;
    let legit = track(&legit_frames, &cfg)?.trajectory;
    let eaves = track(&eaves_frames, &cfg)?.trajectory;
    Ok(TrackComparison {
        legitimate_median_mm: median(&euclid_errors(&legit, &truth)?.r)? * 1e3,
        eavesdropper_median_mm: median(&euclid_errors(&eaves, &truth)?.r)? * 1e3,
        truth: interleave(&truth),
        legitimate: interleave(&legit),
        eavesdropper: interleave(&eaves),
    })
}

#[wasm_bindgen(js_name = compareTracks)]
pub fn compare_tracks(
    seed: u32,
    phase_noise: f64,
) -> std::result::Result<TrackComparison, JsError> {
    tracks(seed.into(), phase_noise).map_err(js_err)
}

/// Channel index for each of the first `slots` slots of a deployment.
pub fn schedule(deployment_seed: u64, slots: usize) -> Result<Vec<u32>> {
    let cfg = SystemConfig::default();
    let s = make_hop_schedule(deployment_seed, cfg.channel_plan, cfg.slot_duration)?;
    Ok(s.channels(0, slots).into_iter().map(|c| c as u32).collect())
}

#[wasm_bindgen(js_name = hopSchedule)]
pub fn hop_schedule(deployment_seed: u32, slots: u32) -> std::result::Result<Vec<u32>, JsError> {
    schedule(deployment_seed.into(), slots as usize).map_err(js_err)
}
