//! Windowed training data: hopped reads paired with reference-frequency labels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geom::{Trajectory, TrajectorySample};
use crate::io::{read_json, write_atomic, write_json};
use crate::rfsim::channel::{rssi_model, theoretical_phase_unchecked, ScenarioPreset};
use crate::rfsim::gesture::{random_gesture, GestureParams};
use crate::rfsim::plan::{make_hop_schedule, HopSchedule};
use crate::rfsim::reads::{simulate_reads, TagRead};
use crate::rng::{derive_seed, seeded_rng_indexed};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_WINDOW_LEN: usize = 16;
const START_SLOT_RANGE: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub preset: ScenarioPreset,
    pub config: SystemConfig,
    pub seed: u64,
    pub n_trajectories: usize,
    pub n_windows: usize,
    /// Ticks per window.
    pub window_len: usize,
    pub gesture: GestureParams,
}

/// `window_len` consecutive ticks of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub window_id: usize,
    pub trajectory_id: usize,
    /// Position of this window within its trajectory.
    pub index: usize,
    /// Legitimate-view reads, tick-major then antenna.
    pub reads: Vec<TagRead>,
    /// Noise-free phase at `f_ref`, one per read.
    pub label_phase: Vec<f64>,
    /// Noise-free RSSI at `f_ref`, one per read.
    pub label_rssi: Vec<f64>,
    /// True position at each tick.
    pub truth: Vec<TrajectorySample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub windows: Vec<Window>,
}

/// Generates `n_trajectories` random gestures under `preset`.
///
/// All trajectories share the deployment's hop schedule (`cfg.seed`) but
/// start at independent slots. Gesture shape and noise use per-trajectory
/// streams of `seed`, so the output is a pure function of the arguments.
pub fn gen_dataset(
    preset: &ScenarioPreset,
    n_trajectories: usize,
    cfg: &SystemConfig,
    seed: u64,
) -> Result<Dataset> {
    Dataset::generate(
        preset,
        n_trajectories,
        cfg,
        seed,
        &GestureParams::default(),
        DEFAULT_WINDOW_LEN,
    )
}

impl Dataset {
    pub fn generate(
        preset: &ScenarioPreset,
        n_trajectories: usize,
        cfg: &SystemConfig,
        seed: u64,
        gesture: &GestureParams,
        window_len: usize,
    ) -> Result<Dataset> {
        if n_trajectories < 1 {
            return Err(Error::Config(
                "dataset needs at least one trajectory".into(),
            ));
        }
        if window_len < 1 {
            return Err(Error::Config("window length must be >= 1".into()));
        }
        cfg.validate()?;
        preset.validate()?;
        let schedule = make_hop_schedule(cfg.seed, cfg.channel_plan, cfg.slot_duration)?;
        let mut windows = Vec::new();
        for traj_id in 0..n_trajectories {
            let traj = random_gesture(
                gesture,
                &cfg.workspace,
                &mut seeded_rng_indexed(seed, "gesture", traj_id as u64),
            )?;
            let start = derive_seed(seed, "start-slot", traj_id as u64) % START_SLOT_RANGE;
            let sched = schedule.starting_at(start);
            let next_id = windows.len();
            windows.extend(Self::trajectory_windows(
                &traj,
                traj_id,
                next_id,
                cfg,
                &sched,
                preset,
                gesture.rate,
                window_len,
                seed,
            )?);
        }
        let manifest = DatasetManifest {
            format_version: DATASET_FORMAT_VERSION,
            preset: preset.clone(),
            config: cfg.clone(),
            seed,
            n_trajectories,
            n_windows: windows.len(),
            window_len,
            gesture: *gesture,
        };
        Ok(Dataset { manifest, windows })
    }

    #[allow(clippy::too_many_arguments)]
    fn trajectory_windows(
        traj: &Trajectory,
        traj_id: usize,
        first_window_id: usize,
        cfg: &SystemConfig,
        schedule: &HopSchedule,
        preset: &ScenarioPreset,
        rate: f64,
        window_len: usize,
        seed: u64,
    ) -> Result<Vec<Window>> {
        let mut rng = seeded_rng_indexed(seed, "reads", traj_id as u64);
        let reads = simulate_reads(traj, cfg, schedule, preset, rate, &mut rng)?;
        let n_ant = cfg.n_antennas();
        let n_ticks = reads.len() / n_ant;
        let mut out = Vec::new();
        for (index, start) in (0..n_ticks / window_len).map(|w| (w, w * window_len)) {
            let rs = &reads[start * n_ant..(start + window_len) * n_ant];
            let mut label_phase = Vec::with_capacity(rs.len());
            let mut label_rssi = Vec::with_capacity(rs.len());
            for r in rs {
                let p = traj.position_at(r.t);
                let a = &cfg.antennas[r.antenna];
                label_phase.push(theoretical_phase_unchecked(p.distance(a), cfg.f_ref));
                label_rssi.push(rssi_model(&p, a, cfg.f_ref, preset)?);
            }
            let truth = rs
                .chunks(n_ant)
                .map(|tick| TrajectorySample {
                    t: tick[0].t,
                    p: traj.position_at(tick[0].t),
                })
                .collect();
            out.push(Window {
                window_id: first_window_id + index,
                trajectory_id: traj_id,
                index,
                reads: rs.to_vec(),
                label_phase,
                label_rssi,
                truth,
            });
        }
        Ok(out)
    }

    pub fn n_antennas(&self) -> usize {
        self.manifest.config.n_antennas()
    }

    pub fn n_channels(&self) -> usize {
        self.manifest.config.channel_plan.count
    }

    /// Windows grouped by trajectory, in window order.
    pub fn trajectories(&self) -> Vec<Vec<&Window>> {
        let mut out: Vec<Vec<&Window>> = vec![Vec::new(); self.manifest.n_trajectories];
        for w in &self.windows {
            if let Some(slot) = out.get_mut(w.trajectory_id) {
                slot.push(w);
            }
        }
        for t in &mut out {
            t.sort_by_key(|w| w.index);
        }
        out
    }

    /// The hop schedule this dataset was recorded under (epoch 0).
    pub fn schedule(&self) -> Result<HopSchedule> {
        let cfg = &self.manifest.config;
        make_hop_schedule(cfg.seed, cfg.channel_plan, cfg.slot_duration)
    }

    /// One JSON object per window.
    pub fn to_jsonl(&self) -> String {
        let n_ch = self.n_channels();
        let mut out = String::new();
        for w in &self.windows {
            let inputs: Vec<Vec<f64>> = w
                .reads
                .iter()
                .map(|r| {
                    let mut row = Vec::with_capacity(n_ch + 4);
                    row.push(r.t);
                    row.push(r.antenna as f64);
                    row.extend((0..n_ch).map(|c| if r.channel == Some(c) { 1.0 } else { 0.0 }));
                    row.push(r.phase);
                    row.push(r.rssi);
                    row
                })
                .collect();
            let labels: Vec<[f64; 2]> = w
                .label_phase
                .iter()
                .zip(&w.label_rssi)
                .map(|(&p, &r)| [p, r])
                .collect();
            let truth: Vec<[f64; 3]> = w.truth.iter().map(|s| [s.t, s.p.x, s.p.y]).collect();
            let rec = WindowRecord {
                window_id: w.window_id,
                trajectory_id: w.trajectory_id,
                window_index: w.index,
                inputs,
                labels,
                truth,
            };
            // WindowRecord holds only finite numbers and plain containers
            let line = serde_json::to_string(&rec).expect("window record serializes");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// Writes `dataset.jsonl` and `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("dataset.jsonl"), self.to_jsonl().as_bytes())?;
        write_json(&dir.join("manifest.json"), &self.manifest)
    }

    pub fn read(dir: &Path) -> Result<Dataset> {
        let manifest: DatasetManifest = read_json(&dir.join("manifest.json"))?;
        if manifest.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: dataset format {} is not supported",
                dir.display(),
                manifest.format_version
            )));
        }
        manifest.config.validate()?;
        let path = dir.join("dataset.jsonl");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let n_ch = manifest.config.channel_plan.count;
        let mut windows = Vec::with_capacity(manifest.n_windows);
        for (lineno, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let ctx = || format!("{} line {}", path.display(), lineno + 1);
            let rec: WindowRecord =
                serde_json::from_str(line).map_err(|e| Error::json(ctx(), e))?;
            windows.push(
                rec.into_window(n_ch)
                    .map_err(|e| Error::Config(format!("{}: {e}", ctx())))?,
            );
        }
        if windows.len() != manifest.n_windows {
            return Err(Error::Config(format!(
                "{}: manifest lists {} windows, found {}",
                dir.display(),
                manifest.n_windows,
                windows.len()
            )));
        }
        Ok(Dataset { manifest, windows })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRecord {
    window_id: usize,
    trajectory_id: usize,
    window_index: usize,
    inputs: Vec<Vec<f64>>,
    labels: Vec<[f64; 2]>,
    truth: Vec<[f64; 3]>,
}

impl WindowRecord {
    fn into_window(self, n_ch: usize) -> std::result::Result<Window, String> {
        if self.inputs.len() != self.labels.len() {
            return Err("inputs and labels differ in length".into());
        }
        let reads = self
            .inputs
            .iter()
            .map(|row| {
                if row.len() != n_ch + 4 {
                    return Err(format!(
                        "input row has {} fields, expected {}",
                        row.len(),
                        n_ch + 4
                    ));
                }
                let onehot = &row[2..2 + n_ch];
                let channel = onehot.iter().position(|&v| v == 1.0);
                Ok(TagRead {
                    t: row[0],
                    antenna: row[1] as usize,
                    channel,
                    phase: row[2 + n_ch],
                    rssi: row[3 + n_ch],
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Window {
            window_id: self.window_id,
            trajectory_id: self.trajectory_id,
            index: self.window_index,
            reads,
            label_phase: self.labels.iter().map(|l| l[0]).collect(),
            label_rssi: self.labels.iter().map(|l| l[1]).collect(),
            truth: self
                .truth
                .iter()
                .map(|&[t, x, y]| TrajectorySample {
                    t,
                    p: crate::geom::Position2D::new(x, y),
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfsim::theoretical_phase;
    use std::f64::consts::TAU;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SystemConfig::default();
        let a = gen_dataset(&ScenarioPreset::dataset1(), 2, &cfg, 7).unwrap();
        let b = gen_dataset(&ScenarioPreset::dataset1(), 2, &cfg, 7).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_eq!(a.windows.len(), 50);
        let c = gen_dataset(&ScenarioPreset::dataset1(), 2, &cfg, 8).unwrap();
        assert_ne!(a.to_jsonl(), c.to_jsonl());
    }

    #[test]
    fn labels_are_wrapped_reference_phases() {
        let cfg = SystemConfig::default();
        let ds = gen_dataset(&ScenarioPreset::ideal(), 1, &cfg, 3).unwrap();
        for w in &ds.windows {
            for (r, &lp) in w.reads.iter().zip(&w.label_phase) {
                assert!((0.0..TAU).contains(&lp));
                let tick = w.truth.iter().find(|s| s.t == r.t).unwrap();
                let expect =
                    theoretical_phase(&tick.p, &cfg.antennas[r.antenna], cfg.f_ref).unwrap();
                assert!((lp - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SystemConfig::default();
        let ds = gen_dataset(&ScenarioPreset::dataset2(), 1, &cfg, 1).unwrap();
        ds.write(dir.path()).unwrap();
        let back = Dataset::read(dir.path()).unwrap();
        assert_eq!(back, ds);
        let first = fs::read(dir.path().join("dataset.jsonl")).unwrap();
        ds.write(dir.path()).unwrap();
        assert_eq!(first, fs::read(dir.path().join("dataset.jsonl")).unwrap());
    }

    #[test]
    fn rejects_zero_trajectories() {
        assert!(gen_dataset(&ScenarioPreset::dataset1(), 0, &SystemConfig::default(), 1).is_err());
    }
}
