use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::TrainParams;
use super::features::{window_inputs, window_targets};
use super::model::{loss, LossParts, RecoveryModel};
use crate::error::{Error, Result};
use crate::io::fmt_sig6;
use crate::neural::{adam_step, AdamConfig, AdamState, Mode, Tensor};
use crate::rfsim::Window;
use crate::rng::{seeded_rng, seeded_rng_indexed};

/// Encoded windows ready for batching.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub seq_len: usize,
    inputs: Vec<Tensor>,
    phase: Vec<Tensor>,
    rssi: Vec<Tensor>,
}

impl TrainingSet {
    pub fn from_windows(windows: &[Window], n_antennas: usize, n_channels: usize) -> Result<Self> {
        let first = windows
            .first()
            .ok_or_else(|| Error::Empty("no windows to train on".into()))?;
        let seq_len = first.reads.len() / n_antennas.max(1);
        let mut set = TrainingSet {
            seq_len,
            inputs: Vec::with_capacity(windows.len()),
            phase: Vec::with_capacity(windows.len()),
            rssi: Vec::with_capacity(windows.len()),
        };
        for w in windows {
            let x = window_inputs(w, n_antennas, n_channels)?;
            if x.rows() != seq_len {
                return Err(Error::Shape(format!(
                    "window {} has {} ticks, expected {seq_len}",
                    w.window_id,
                    x.rows()
                )));
            }
            let (p, r) = window_targets(w, n_antennas)?;
            set.inputs.push(x);
            set.phase.push(p);
            set.rssi.push(r);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Stacks the selected windows row-wise.
    pub fn batch(&self, idx: &[usize]) -> (Tensor, Tensor, Tensor) {
        let stack = |parts: &[Tensor]| {
            let cols = parts[0].cols();
            let data: Vec<f64> = idx
                .iter()
                .flat_map(|&i| parts[i].data().iter().copied())
                .collect();
            Tensor::from_vec(&[idx.len() * self.seq_len, cols], data)
                .expect("consistent window shapes")
        };
        (stack(&self.inputs), stack(&self.phase), stack(&self.rssi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    LossThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches (dropout active).
    pub train_loss: f64,
    /// Eval-mode loss on the held-out split; absent without a split.
    pub val_loss: Option<f64>,
    pub phase_term: f64,
    pub aux_term: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub params: TrainParams,
    pub n_train: usize,
    pub n_val: usize,
    /// Eval-mode loss on the training split before the first update.
    pub initial: LossParts,
    /// Eval-mode loss on the training split after the last update.
    pub final_train: LossParts,
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub final_epoch: usize,
    /// Seconds spent training. Not serialized, so reports of identical runs
    /// are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl TrainReport {
    /// Ratio of the eval-mode training loss before and after training.
    pub fn loss_reduction(&self) -> f64 {
        self.initial.total / self.final_train.total
    }

    /// Loss curve as CSV: `epoch,train_loss,val_loss,phase_term,aux_term`.
    pub fn loss_curve_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,phase_term,aux_term\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch,
                fmt_sig6(e.train_loss),
                e.val_loss.map(fmt_sig6).unwrap_or_default(),
                fmt_sig6(e.phase_term),
                fmt_sig6(e.aux_term)
            ));
        }
        s
    }
}

/// Seeded train/validation split of `n` window indices.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed, "split"));
    let n_val = ((n as f64) * val_fraction).floor() as usize;
    let val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    train.sort_unstable();
    (train, val)
}

/// Eval-mode loss over `idx`, batch-weighted.
pub fn evaluate(
    model: &RecoveryModel,
    set: &TrainingSet,
    idx: &[usize],
    batch_size: usize,
    aux_weight: f64,
) -> Result<LossParts> {
    let mut acc = LossParts {
        total: 0.0,
        phase: 0.0,
        aux: 0.0,
    };
    if idx.is_empty() {
        return Err(Error::Empty("no windows to evaluate".into()));
    }
    let mut rng = seeded_rng(0, "eval");
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, yp, yr) = set.batch(chunk);
        let (out, _) = model.forward(&x, set.seq_len, Mode::Eval, &mut rng)?;
        let (l, _, _) = loss(&out, &yp, &yr, aux_weight)?;
        let w = chunk.len() as f64 / idx.len() as f64;
        acc.total += w * l.total;
        acc.phase += w * l.phase;
        acc.aux += w * l.aux;
    }
    Ok(acc)
}

/// Trains `model` with Adam until `max_epochs` or until an epoch's mean
/// training loss falls below `loss_threshold`.
pub fn train(
    model: &mut RecoveryModel,
    set: &TrainingSet,
    hp: &TrainParams,
) -> Result<TrainReport> {
    hp.validate()?;
    if set.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    let started = Instant::now();
    model.config.dropout = hp.dropout;
    let (train_idx, val_idx) = split_indices(set.len(), hp.val_fraction, hp.seed);
    if train_idx.is_empty() {
        return Err(Error::Empty(
            "validation split leaves no training windows".into(),
        ));
    }
    let initial = evaluate(model, set, &train_idx, hp.batch_size, hp.aux_weight)?;
    let mut adam = AdamState::new(
        &model.params,
        AdamConfig {
            lr: hp.learning_rate,
            weight_decay: hp.l2_coefficient,
            ..Default::default()
        },
    );
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    for epoch in 1..=hp.max_epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut seeded_rng_indexed(
            hp.seed,
            "epoch-order",
            epoch as u64,
        ));
        let mut drop_rng = seeded_rng_indexed(hp.seed, "dropout", epoch as u64);
        let (mut total, mut phase, mut aux) = (0.0, 0.0, 0.0);
        for (b, chunk) in order.chunks(hp.batch_size).enumerate() {
            let (x, yp, yr) = set.batch(chunk);
            let (out, cache) = model.forward(&x, set.seq_len, Mode::Train, &mut drop_rng)?;
            let (l, gp, gr) = loss(&out, &yp, &yr, hp.aux_weight)?;
            if !l.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            model.params.zero_grad();
            model.backward(&cache, &gp, &gr);
            adam_step(&mut model.params, &mut adam)?;
            let w = chunk.len() as f64 / order.len() as f64;
            total += w * l.total;
            phase += w * l.phase;
            aux += w * l.aux;
        }
        let val_loss = if val_idx.is_empty() {
            None
        } else {
            Some(evaluate(model, set, &val_idx, hp.batch_size, hp.aux_weight)?.total)
        };
        log::debug!("epoch {epoch}: train {total:.6} val {val_loss:?}");
        epochs.push(EpochRecord {
            epoch,
            train_loss: total,
            val_loss,
            phase_term: phase,
            aux_term: aux,
        });
        if total < hp.loss_threshold {
            stop_reason = StopReason::LossThreshold;
            break;
        }
    }
    let final_epoch = epochs.len();
    let final_train = evaluate(model, set, &train_idx, hp.batch_size, hp.aux_weight)?;
    Ok(TrainReport {
        params: *hp,
        n_train: train_idx.len(),
        n_val: val_idx.len(),
        initial,
        final_train,
        epochs,
        stop_reason,
        final_epoch,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}
