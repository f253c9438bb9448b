use std::f64::consts::TAU;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::geom::{wrap_unchecked, Trajectory};
use crate::rfsim::channel::{rssi_model, theoretical_phase_unchecked, ScenarioPreset};
use crate::rfsim::plan::{ChannelPlan, HopSchedule};
use crate::rng::Rng;

/// One backscatter observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagRead {
    pub t: f64,
    pub antenna: usize,
    /// Present only in the legitimate receiver's view.
    pub channel: Option<usize>,
    /// Wrapped phase, radians in `[0, 2π)`.
    pub phase: f64,
    /// dBm
    pub rssi: f64,
}

/// Simulates one read per antenna per tick over the trajectory's time span.
///
/// Positions between trajectory samples are linearly interpolated. Noise is
/// drawn from `rng` in tick order, phase before RSSI, antenna by antenna.
pub fn simulate_reads(
    traj: &Trajectory,
    cfg: &SystemConfig,
    schedule: &HopSchedule,
    preset: &ScenarioPreset,
    read_rate: f64,
    rng: &mut Rng,
) -> Result<Vec<TagRead>> {
    if !(read_rate > 0.0 && read_rate.is_finite()) {
        return Err(Error::Domain(format!(
            "read rate must be > 0, got {read_rate}"
        )));
    }
    preset.validate()?;
    let span = traj.end_time() - traj.start_time();
    let n_ticks = (span * read_rate + 1e-9).floor() as usize + 1;
    let plan = schedule.plan();
    let mut reads = Vec::with_capacity(n_ticks * cfg.antennas.len());
    for k in 0..n_ticks {
        let t = traj.start_time() + k as f64 / read_rate;
        let p = traj.position_at(t);
        let channel = schedule.channel_at(t);
        let f = plan.frequency(channel)?;
        let offset = cfg.tag_phase_offset
            + if preset.channel_phase_offsets {
                schedule.phase_offset(channel)
            } else {
                0.0
            };
        for (antenna, a) in cfg.antennas.iter().enumerate() {
            let n_phase: f64 = StandardNormal.sample(rng);
            let n_rssi: f64 = StandardNormal.sample(rng);
            let phase = theoretical_phase_unchecked(p.distance(a), f)
                + offset
                + preset.phase_noise_sigma * n_phase;
            let rssi = rssi_model(&p, a, f, preset)? + preset.rssi_noise_sigma * n_rssi;
            reads.push(TagRead {
                t,
                antenna,
                channel: Some(channel),
                phase: wrap_unchecked(phase),
                rssi,
            });
        }
    }
    Ok(reads)
}

/// What a receiver without the hop schedule observes.
pub fn eavesdropper_view(reads: &[TagRead]) -> Vec<TagRead> {
    reads
        .iter()
        .map(|r| TagRead {
            channel: None,
            ..*r
        })
        .collect()
}

/// Converts channel-tagged reads to the reference frequency using the true
/// tag distance. Only usable inside the simulator, where the truth is known.
pub fn analytic_dehop(
    reads: &[TagRead],
    truth: &Trajectory,
    cfg: &SystemConfig,
    schedule: &HopSchedule,
    preset: &ScenarioPreset,
) -> Result<Vec<TagRead>> {
    reads
        .iter()
        .map(|r| {
            let channel = r.channel.ok_or_else(|| {
                Error::Domain("analytic de-hopping needs channel-tagged reads".into())
            })?;
            let a = cfg.antennas.get(r.antenna).ok_or(Error::OutOfRange {
                index: r.antenna,
                len: cfg.antennas.len(),
            })?;
            let f = schedule.plan().frequency(channel)?;
            let d = truth.position_at(r.t).distance(a);
            let mut phase = r.phase - 2.0 * TAU * (f - cfg.f_ref) * d / SPEED_OF_LIGHT;
            if preset.channel_phase_offsets {
                phase -= schedule.phase_offset(channel);
            }
            Ok(TagRead {
                channel: None,
                phase: wrap_unchecked(phase),
                ..*r
            })
        })
        .collect()
}

/// All antennas' reads at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFrame {
    pub t: f64,
    /// Frequency the phases are expressed at, Hz.
    pub freq: f64,
    pub channel: Option<usize>,
    pub phases: Vec<f64>,
    pub rssi: Vec<f64>,
}

/// Groups time-ordered reads into per-tick frames.
///
/// Reads carrying a channel are taken at that channel's frequency; reads
/// without one are assumed to be at `f_ref`.
pub fn frames_from_reads(
    reads: &[TagRead],
    n_antennas: usize,
    plan: &ChannelPlan,
    f_ref: f64,
) -> Result<Vec<PhaseFrame>> {
    let mut frames: Vec<PhaseFrame> = Vec::new();
    let mut seen: Vec<bool> = Vec::new();
    let close = |frames: &[PhaseFrame], seen: &[bool]| -> Result<()> {
        if let (Some(f), Some(miss)) = (frames.last(), seen.iter().position(|s| !s)) {
            return Err(Error::Coverage(format!(
                "no read from antenna {miss} at t = {}",
                f.t
            )));
        }
        Ok(())
    };
    for r in reads {
        if r.antenna >= n_antennas {
            return Err(Error::OutOfRange {
                index: r.antenna,
                len: n_antennas,
            });
        }
        let new_tick = frames.last().is_none_or(|f| f.t != r.t);
        if new_tick {
            close(&frames, &seen)?;
            if let Some(last) = frames.last() {
                if r.t < last.t {
                    return Err(Error::Domain(format!(
                        "reads are not time-ordered (t = {} after {})",
                        r.t, last.t
                    )));
                }
            }
            let freq = match r.channel {
                Some(c) => plan.frequency(c)?,
                None => f_ref,
            };
            frames.push(PhaseFrame {
                t: r.t,
                freq,
                channel: r.channel,
                phases: vec![0.0; n_antennas],
                rssi: vec![0.0; n_antennas],
            });
            seen = vec![false; n_antennas];
        }
        let f = frames.last_mut().unwrap();
        if f.channel != r.channel {
            return Err(Error::Domain(format!(
                "reads at t = {} disagree on the channel",
                r.t
            )));
        }
        if seen[r.antenna] {
            return Err(Error::Domain(format!(
                "duplicate read from antenna {} at t = {}",
                r.antenna, r.t
            )));
        }
        seen[r.antenna] = true;
        f.phases[r.antenna] = r.phase;
        f.rssi[r.antenna] = r.rssi;
    }
    close(&frames, &seen)?;
    Ok(frames)
}
