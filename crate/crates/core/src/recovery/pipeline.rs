use super::features::frame_inputs;
use super::model::RecoveryModel;
use crate::error::{Error, Result};
use crate::neural::Tensor;
use crate::rfsim::PhaseFrame;

/// Replaces hopped frames by the model's reference-frequency estimate.
///
/// Frames are cut into consecutive chunks of `window_len` ticks (the last
/// chunk may be shorter) and each chunk is recovered independently, as in
/// training. Output frames carry `f_ref` and no channel.
pub fn recover_frames(
    model: &RecoveryModel,
    frames: &[PhaseFrame],
    window_len: usize,
    f_ref: f64,
) -> Result<Vec<PhaseFrame>> {
    if frames.is_empty() {
        return Err(Error::Empty("no frames to recover".into()));
    }
    if window_len == 0 {
        return Err(Error::Config("window length must be >= 1".into()));
    }
    let x = frame_inputs(frames, model.n_antennas, model.n_channels)?;
    let full = frames.len() / window_len;
    let mut recovered = Vec::with_capacity(frames.len());
    if full > 0 {
        let head = Tensor::from_vec(
            &[full * window_len, x.cols()],
            x.data()[..full * window_len * x.cols()].to_vec(),
        )?;
        recovered.extend(model.recover_batch(&head, window_len)?);
    }
    if full * window_len < frames.len() {
        let tail_rows = frames.len() - full * window_len;
        let tail = Tensor::from_vec(
            &[tail_rows, x.cols()],
            x.data()[full * window_len * x.cols()..].to_vec(),
        )?;
        recovered.push(model.recover(&tail)?);
    }
    let mut out = Vec::with_capacity(frames.len());
    let mut it = frames.iter();
    for r in recovered {
        for (phase, rssi) in r.phase.into_iter().zip(r.rssi) {
            let f = it.next().expect("one recovered row per frame");
            out.push(PhaseFrame {
                t: f.t,
                freq: f_ref,
                channel: None,
                phases: phase,
                rssi,
            });
        }
    }
    Ok(out)
}
