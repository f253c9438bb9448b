//! System configuration shared by the simulator, tracker and models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Position2D, WorkspaceGrid};
use crate::rfsim::ChannelPlan;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub workspace: WorkspaceGrid,
    pub antennas: Vec<Position2D>,
    pub channel_plan: ChannelPlan,
    /// Reference frequency that de-hopped phases are expressed at, Hz.
    pub f_ref: f64,
    /// Default phase noise for custom scenarios, radians.
    pub phase_noise_sigma: f64,
    /// Default RSSI noise for custom scenarios, dB.
    pub rssi_noise_sigma: f64,
    /// Width of the confidence kernel, radians.
    pub kernel_sigma: f64,
    /// Constant phase offset shared by every antenna (tag + cabling), radians.
    pub tag_phase_offset: f64,
    /// Reads per second per antenna.
    pub read_rate: f64,
    /// Dwell time of one hop, seconds.
    pub slot_duration: f64,
    /// Deployment secret: seeds the hop schedule and per-channel phase offsets.
    pub seed: u64,
}

/// Four antennas on the x axis, 0.14 m apart, centered on x = 0.5.
pub fn default_antennas() -> Vec<Position2D> {
    (0..4)
        .map(|k| Position2D::new(0.5 + 0.14 * (k as f64 - 1.5), 0.0))
        .collect()
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            workspace: WorkspaceGrid::default(),
            antennas: default_antennas(),
            channel_plan: ChannelPlan::default(),
            f_ref: 915e6,
            phase_noise_sigma: 0.1,
            rssi_noise_sigma: 1.0,
            kernel_sigma: 0.3,
            tag_phase_offset: 0.0,
            read_rate: 200.0,
            slot_duration: 0.02,
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        self.channel_plan.validate()?;
        if self.antennas.len() < 2 {
            return Err(Error::Config(format!(
                "at least 2 antennas required, got {}",
                self.antennas.len()
            )));
        }
        if self.antennas.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("antenna positions must be finite".into()));
        }
        let (lo, hi) = self.channel_plan.band();
        if !(self.f_ref >= lo && self.f_ref <= hi) {
            return Err(Error::Config(format!(
                "f_ref {} Hz lies outside the channel plan band [{lo}, {hi}]",
                self.f_ref
            )));
        }
        for (name, v) in [
            ("phase_noise_sigma", self.phase_noise_sigma),
            ("rssi_noise_sigma", self.rssi_noise_sigma),
            ("kernel_sigma", self.kernel_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0")));
            }
        }
        if self.kernel_sigma == 0.0 {
            return Err(Error::Config("kernel_sigma must be > 0".into()));
        }
        if !(self.read_rate > 0.0 && self.slot_duration > 0.0) {
            return Err(Error::Config(
                "read_rate and slot_duration must be > 0".into(),
            ));
        }
        if !self.tag_phase_offset.is_finite() {
            return Err(Error::Config("tag_phase_offset must be finite".into()));
        }
        Ok(())
    }

    pub fn n_antennas(&self) -> usize {
        self.antennas.len()
    }

    /// Read ticks per hop slot.
    pub fn ticks_per_slot(&self) -> usize {
        (self.slot_duration * self.read_rate).round().max(1.0) as usize
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            serde_json::from_str(text).map_err(|e| Error::json("system config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SystemConfig = serde_json::from_str(&text)
            .map_err(|e| Error::json(format!("system config {}", path.display()), e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
