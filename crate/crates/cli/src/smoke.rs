//! End-to-end run of the whole pipeline on freshly simulated data.

use serde::{Deserialize, Serialize};

use hopscatter::evalx::{evaluate_tracking, MetricsRecord, PooledEval, TrackMode};
use hopscatter::recovery::{build_model, train, StopReason, TrainParams, TrainingSet};
use hopscatter::rfsim::{gen_dataset, ScenarioPreset};
use hopscatter::rng::{derive_seed, seeded_rng};
use hopscatter::SystemConfig;

use crate::{CliError, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmokeOptions {
    pub preset: String,
    pub train_trajectories: usize,
    pub test_trajectories: usize,
    pub epochs: usize,
}

impl Default for SmokeOptions {
    /// Desk scale: 2 000 training windows, 30 epochs.
    fn default() -> Self {
        SmokeOptions {
            preset: "dataset1".into(),
            train_trajectories: 80,
            test_trajectories: 20,
            epochs: 30,
        }
    }
}

impl SmokeOptions {
    pub fn tiny() -> Self {
        SmokeOptions {
            train_trajectories: 4,
            test_trajectories: 2,
            epochs: 2,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    /// Millimetres.
    pub metrics: MetricsRecord,
    pub median_r_mm: f64,
}

impl From<PooledEval> for PathMetrics {
    fn from(e: PooledEval) -> Self {
        PathMetrics {
            metrics: e.metrics,
            median_r_mm: e.median_r * 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmokeSummary {
    pub seed: u64,
    pub options: SmokeOptions,
    pub train_windows: usize,
    pub test_windows: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub loss_reduction: f64,
    pub stop_reason: StopReason,
    pub epochs_run: usize,
    /// Recovered phases → tracker.
    pub legitimate: PathMetrics,
    /// Channel-stripped hopped phases → tracker.
    pub eavesdropper: PathMetrics,
    /// Channel-known analytic de-hopping → tracker (upper bound).
    pub analytic: PathMetrics,
    /// Eavesdropper median error over legitimate median error.
    pub privacy_ratio: f64,
}

/// gen → train → track → eval. Any failure names its stage.
pub fn pipeline_smoke(seed: u64, opts: &SmokeOptions) -> Result<SmokeSummary, CliError> {
    let cfg = SystemConfig::default();
    let preset = ScenarioPreset::by_name(&opts.preset).stage("gen")?;
    let train_ds = gen_dataset(
        &preset,
        opts.train_trajectories,
        &cfg,
        derive_seed(seed, "smoke-train", 0),
    )
    .stage("gen")?;
    let test_ds = gen_dataset(
        &preset,
        opts.test_trajectories,
        &cfg,
        derive_seed(seed, "smoke-test", 0),
    )
    .stage("gen")?;

    let set = TrainingSet::from_windows(
        &train_ds.windows,
        train_ds.n_antennas(),
        train_ds.n_channels(),
    )
    .stage("train")?;
    let hp = TrainParams {
        max_epochs: opts.epochs,
        seed,
        ..TrainParams::desk_scale()
    };
    let mut model =
        build_model(&Default::default(), &cfg, &mut seeded_rng(seed, "init")).stage("train")?;
    let report = train(&mut model, &set, &hp).stage("train")?;

    let legitimate: PathMetrics = evaluate_tracking(&test_ds, TrackMode::Recovered, Some(&model))
        .stage("track")?
        .into();
    let eavesdropper: PathMetrics = evaluate_tracking(&test_ds, TrackMode::Eavesdropper, None)
        .stage("track")?
        .into();
    let analytic: PathMetrics = evaluate_tracking(&test_ds, TrackMode::Analytic, None)
        .stage("track")?
        .into();
    if legitimate.median_r_mm <= 0.0 {
        return Err(CliError::new(
            "eval",
            crate::EXIT_RUNTIME,
            "legitimate median error is zero",
        ));
    }
    Ok(SmokeSummary {
        seed,
        options: opts.clone(),
        train_windows: train_ds.windows.len(),
        test_windows: test_ds.windows.len(),
        initial_loss: report.initial.total,
        final_loss: report.final_train.total,
        loss_reduction: report.loss_reduction(),
        stop_reason: report.stop_reason,
        epochs_run: report.final_epoch,
        privacy_ratio: eavesdropper.median_r_mm / legitimate.median_r_mm,
        legitimate,
        eavesdropper,
        analytic,
    })
}
