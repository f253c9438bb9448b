use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded_rng, seeded_rng_indexed};

/// Evenly spaced hop channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPlan {
    pub base_hz: f64,
    pub spacing_hz: f64,
    pub count: usize,
}

impl Default for ChannelPlan {
    /// 50 channels from 902.75 MHz in 500 kHz steps (US UHF RFID band).
    fn default() -> Self {
        ChannelPlan {
            base_hz: 902.75e6,
            spacing_hz: 0.5e6,
            count: 50,
        }
    }
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Config(
                "channel plan needs at least one channel".into(),
            ));
        }
        if !(self.spacing_hz > 0.0 && self.spacing_hz.is_finite()) {
            return Err(Error::Config("channel spacing must be > 0".into()));
        }
        if !(self.base_hz > 0.0 && self.base_hz.is_finite()) {
            return Err(Error::Config("channel frequencies must be positive".into()));
        }
        Ok(())
    }

    /// Lowest and highest channel frequency.
    pub fn band(&self) -> (f64, f64) {
        (
            self.base_hz,
            self.base_hz + (self.count.saturating_sub(1)) as f64 * self.spacing_hz,
        )
    }

    pub fn frequency(&self, idx: usize) -> Result<f64> {
        channel_frequency(self, idx)
    }
}

pub fn channel_frequency(plan: &ChannelPlan, idx: usize) -> Result<f64> {
    if idx >= plan.count {
        return Err(Error::OutOfRange {
            index: idx,
            len: plan.count,
        });
    }
    Ok(plan.base_hz + idx as f64 * plan.spacing_hz)
}

/// Seeded slot → channel map built from concatenated random permutations.
///
/// Every block of `plan.count` consecutive slots (aligned to the schedule
/// epoch) uses each channel exactly once. The schedule also carries the
/// reader's per-channel phase offsets, which change with every hop and are
/// only known to whoever holds the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct HopSchedule {
    seed: u64,
    plan: ChannelPlan,
    slot_duration: f64,
    start_slot: u64,
    phase_offsets: Vec<f64>,
}

pub fn make_hop_schedule(seed: u64, plan: ChannelPlan, slot_duration: f64) -> Result<HopSchedule> {
    plan.validate()?;
    if !(slot_duration > 0.0 && slot_duration.is_finite()) {
        return Err(Error::Domain(format!(
            "slot duration must be > 0, got {slot_duration}"
        )));
    }
    let mut rng = seeded_rng(seed, "channel-phase-offset");
    let phase_offsets = (0..plan.count)
        .map(|_| rng.random_range(0.0..TAU))
        .collect();
    Ok(HopSchedule {
        seed,
        plan,
        slot_duration,
        start_slot: 0,
        phase_offsets,
    })
}

impl HopSchedule {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn plan(&self) -> &ChannelPlan {
        &self.plan
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn start_slot(&self) -> u64 {
        self.start_slot
    }

    /// The same schedule with local time 0 mapped to `slot`.
    pub fn starting_at(&self, slot: u64) -> HopSchedule {
        HopSchedule {
            start_slot: slot,
            ..self.clone()
        }
    }

    fn block(&self, block: u64) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.plan.count).collect();
        let mut rng = seeded_rng_indexed(self.seed, "hop", block);
        perm.shuffle(&mut rng);
        perm
    }

    /// Channel used in absolute slot `slot`.
    pub fn channel_at_slot(&self, slot: u64) -> usize {
        let n = self.plan.count as u64;
        self.block(slot / n)[(slot % n) as usize]
    }

    /// Channels for absolute slots `first..first + len`, generating each block once.
    pub fn channels(&self, first: u64, len: usize) -> Vec<usize> {
        let n = self.plan.count as u64;
        let mut out = Vec::with_capacity(len);
        let mut cached: Option<(u64, Vec<usize>)> = None;
        for slot in first..first + len as u64 {
            let b = slot / n;
            if cached.as_ref().map(|(k, _)| *k) != Some(b) {
                cached = Some((b, self.block(b)));
            }
            out.push(cached.as_ref().unwrap().1[(slot % n) as usize]);
        }
        out
    }

    /// Absolute slot active at local time `t` (seconds, ≥ 0).
    pub fn slot_at(&self, t: f64) -> u64 {
        // nudge so tick times computed as k/rate land on the intended slot
        let local = ((t / self.slot_duration) + 1e-9).floor().max(0.0) as u64;
        self.start_slot + local
    }

    pub fn channel_at(&self, t: f64) -> usize {
        self.channel_at_slot(self.slot_at(t))
    }

    /// Reader phase offset applied on channel `idx`.
    pub fn phase_offset(&self, idx: usize) -> f64 {
        self.phase_offsets[idx]
    }
}
