use serde::{Deserialize, Serialize};

use super::metrics::MetricsRecord;
use super::tracking::{evaluate_tracking, TrackMode};
use crate::error::{Error, Result};
use crate::recovery::{build_model, train, ConformerConfig, TrainParams, TrainingSet};
use crate::rfsim::Dataset;
use crate::rng::{derive_seed, seeded_rng_indexed};

/// One scenario: a training set and an independently seeded test set.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub name: String,
    pub train: Dataset,
    pub test: Dataset,
}

/// Outcome of one (config, dataset) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub dataset: String,
    /// Metrics in millimetres; absent when the row failed.
    pub metrics: Option<MetricsRecord>,
    /// Median Euclidean error, millimetres.
    pub median_r_mm: Option<f64>,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub model: String,
    pub cells: Vec<AblationCell>,
}

impl AblationRow {
    pub fn cell(&self, dataset: &str) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.dataset == dataset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub datasets: Vec<String>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, model: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// MAE (mm) of a cell, if it trained.
    pub fn mae(&self, model: &str, dataset: &str) -> Option<f64> {
        self.row(model)?
            .cell(dataset)?
            .metrics
            .as_ref()
            .map(|m| m.mae)
    }
}

fn run_cell(
    config: &ConformerConfig,
    scenario: &ScenarioData,
    index: usize,
    hp: &TrainParams,
    seed: u64,
) -> AblationCell {
    let mut cell = AblationCell {
        dataset: scenario.name.clone(),
        metrics: None,
        median_r_mm: None,
        initial_loss: None,
        final_loss: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let cfg = &scenario.train.manifest.config;
        // every config on a scenario starts from the same seeds
        let mut rng = seeded_rng_indexed(seed, "ablation-init", index as u64);
        let mut model = build_model(config, cfg, &mut rng)?;
        let set = TrainingSet::from_windows(
            &scenario.train.windows,
            scenario.train.n_antennas(),
            scenario.train.n_channels(),
        )?;
        let hp = TrainParams {
            seed: derive_seed(seed, "ablation-train", index as u64),
            ..*hp
        };
        let report = train(&mut model, &set, &hp)?;
        cell.initial_loss = Some(report.initial.total);
        cell.final_loss = Some(report.final_train.total);
        let eval = evaluate_tracking(&scenario.test, TrackMode::Recovered, Some(&model))?;
        cell.median_r_mm = Some(eval.median_r * 1e3);
        cell.metrics = Some(eval.metrics);
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("ablation cell on {} failed: {e}", scenario.name);
        cell.error = Some(e.to_string());
    }
    cell
}

/// Trains every config on every scenario and evaluates tracking through the
/// recovered phases. A failing cell records its error; the rest proceed.
pub fn ablation_run(
    scenarios: &[ScenarioData],
    configs: &[(String, ConformerConfig)],
    hp: &TrainParams,
    seed: u64,
) -> Result<AblationTable> {
    if scenarios.is_empty() || configs.is_empty() {
        return Err(Error::Empty(
            "ablation needs at least one scenario and one config".into(),
        ));
    }
    hp.validate()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..scenarios.len()).map(move |s| (c, s)))
        .collect();
    let job = |&(c, s): &(usize, usize)| run_cell(&configs[c].1, &scenarios[s], s, hp, seed);
    #[cfg(feature = "parallel")]
    let cells: Vec<AblationCell> = {
        use rayon::prelude::*;
        jobs.par_iter().map(job).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<AblationCell> = jobs.iter().map(job).collect();
    let mut cells = cells.into_iter();
    let rows = configs
        .iter()
        .map(|(name, _)| AblationRow {
            model: name.clone(),
            cells: cells.by_ref().take(scenarios.len()).collect(),
        })
        .collect();
    Ok(AblationTable {
        seed,
        datasets: scenarios.iter().map(|s| s.name.clone()).collect(),
        rows,
    })
}
