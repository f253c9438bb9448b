//! Encoding of read streams as network inputs and of reference-frequency
//! phase/RSSI as targets.
//!
//! Per tick the input row is, for each antenna, `(sin φ, cos φ, r̃)` followed
//! by a one-hot channel vector (all zeros when the channel is unknown), where
//! `r̃ = (rssi − RSSI_CENTER) / RSSI_SCALE`. Targets are `(sin φ_ref,
//! cos φ_ref)` pairs per antenna and the normalized reference RSSI.

use crate::error::{Error, Result};
use crate::neural::Tensor;
use crate::rfsim::{PhaseFrame, TagRead, Window};

pub const RSSI_CENTER: f64 = -50.0;
pub const RSSI_SCALE: f64 = 10.0;

pub fn normalize_rssi(dbm: f64) -> f64 {
    (dbm - RSSI_CENTER) / RSSI_SCALE
}

pub fn denormalize_rssi(v: f64) -> f64 {
    v * RSSI_SCALE + RSSI_CENTER
}

pub fn input_width(n_antennas: usize, n_channels: usize) -> usize {
    3 * n_antennas + n_channels
}

fn encode_tick(row: &mut [f64], phases: &[f64], rssi: &[f64], channel: Option<usize>) {
    let n = phases.len();
    for a in 0..n {
        row[3 * a] = phases[a].sin();
        row[3 * a + 1] = phases[a].cos();
        row[3 * a + 2] = normalize_rssi(rssi[a]);
    }
    if let Some(c) = channel {
        row[3 * n + c] = 1.0;
    }
}

/// Input rows for consecutive frames.
pub fn frame_inputs(frames: &[PhaseFrame], n_antennas: usize, n_channels: usize) -> Result<Tensor> {
    let w = input_width(n_antennas, n_channels);
    let mut x = Tensor::zeros(&[frames.len(), w]);
    for (i, f) in frames.iter().enumerate() {
        if f.phases.len() != n_antennas || f.rssi.len() != n_antennas {
            return Err(Error::Shape(format!(
                "frame at t = {} has {} antennas, model expects {n_antennas}",
                f.t,
                f.phases.len()
            )));
        }
        if let Some(c) = f.channel.filter(|&c| c >= n_channels) {
            return Err(Error::OutOfRange {
                index: c,
                len: n_channels,
            });
        }
        encode_tick(x.row_mut(i), &f.phases, &f.rssi, f.channel);
    }
    Ok(x)
}

fn ticks(reads: &[TagRead], n_antennas: usize) -> Result<std::slice::Chunks<'_, TagRead>> {
    if reads.is_empty() || !reads.len().is_multiple_of(n_antennas) {
        return Err(Error::Shape(format!(
            "{} reads do not form whole ticks of {n_antennas} antennas",
            reads.len()
        )));
    }
    Ok(reads.chunks(n_antennas))
}

/// Input rows of a dataset window (reads are tick-major, antenna-minor).
pub fn window_inputs(w: &Window, n_antennas: usize, n_channels: usize) -> Result<Tensor> {
    let width = input_width(n_antennas, n_channels);
    let mut x = Tensor::zeros(&[w.reads.len() / n_antennas.max(1), width]);
    let mut phases = vec![0.0; n_antennas];
    let mut rssi = vec![0.0; n_antennas];
    for (i, tick) in ticks(&w.reads, n_antennas)?.enumerate() {
        for r in tick {
            if r.antenna >= n_antennas {
                return Err(Error::OutOfRange {
                    index: r.antenna,
                    len: n_antennas,
                });
            }
            phases[r.antenna] = r.phase;
            rssi[r.antenna] = r.rssi;
        }
        if let Some(c) = tick[0].channel.filter(|&c| c >= n_channels) {
            return Err(Error::OutOfRange {
                index: c,
                len: n_channels,
            });
        }
        encode_tick(x.row_mut(i), &phases, &rssi, tick[0].channel);
    }
    Ok(x)
}

/// Phase (`T × 2N`) and RSSI (`T × N`) targets of a dataset window.
pub fn window_targets(w: &Window, n_antennas: usize) -> Result<(Tensor, Tensor)> {
    let t = ticks(&w.reads, n_antennas)?.len();
    if w.label_phase.len() != w.reads.len() || w.label_rssi.len() != w.reads.len() {
        return Err(Error::Shape(format!(
            "window {} has {} reads but {}/{} labels",
            w.window_id,
            w.reads.len(),
            w.label_phase.len(),
            w.label_rssi.len()
        )));
    }
    let mut phase = Tensor::zeros(&[t, 2 * n_antennas]);
    let mut rssi = Tensor::zeros(&[t, n_antennas]);
    for (k, r) in w.reads.iter().enumerate() {
        let row = k / n_antennas;
        let a = r.antenna;
        phase.row_mut(row)[2 * a] = w.label_phase[k].sin();
        phase.row_mut(row)[2 * a + 1] = w.label_phase[k].cos();
        rssi.row_mut(row)[a] = normalize_rssi(w.label_rssi[k]);
    }
    Ok((phase, rssi))
}
