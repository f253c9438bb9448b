use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture of the de-hopping network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConformerConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_conformer_blocks: usize,
    pub n_pre_cnn_layers: usize,
    pub cnn_width_multiplier: usize,
    pub conv_kernel: usize,
    pub ffn_expansion: usize,
    pub dropout: f64,
    pub use_cnn_preproc: bool,
    pub use_transformer_preproc: bool,
    /// Whether conformer blocks contain their self-attention sublayer.
    pub block_attention: bool,
}

impl Default for ConformerConfig {
    fn default() -> Self {
        ConformerConfig {
            d_model: 32,
            n_heads: 4,
            n_conformer_blocks: 1,
            n_pre_cnn_layers: 2,
            cnn_width_multiplier: 2,
            conv_kernel: 7,
            ffn_expansion: 4,
            dropout: 0.1,
            use_cnn_preproc: true,
            use_transformer_preproc: true,
            block_attention: true,
        }
    }
}

impl ConformerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d_model < 2 {
            return bad(format!("d_model must be >= 2, got {}", self.d_model));
        }
        if self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.conv_kernel.is_multiple_of(2) {
            return bad(format!("conv_kernel must be odd, got {}", self.conv_kernel));
        }
        if self.cnn_width_multiplier == 0 || self.ffn_expansion == 0 {
            return bad("width multipliers must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

/// Training recipe. Field names follow the published setup; defaults are
/// the paper-scale values, [`TrainParams::desk_scale`] the laptop variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub loss_threshold: f64,
    pub dropout: f64,
    pub l2_coefficient: f64,
    /// Weight of the auxiliary RSSI term.
    pub aux_weight: f64,
    /// Fraction of windows held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 300,
            loss_threshold: 0.01,
            dropout: 0.1,
            l2_coefficient: 1e-4,
            aux_weight: 0.1,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub const MAX_EPOCHS_LIMIT: usize = 300;

    /// Batch 32 and 30 epochs; everything else as published.
    pub fn desk_scale() -> Self {
        TrainParams {
            batch_size: 32,
            max_epochs: 30,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.max_epochs == 0 || self.max_epochs > Self::MAX_EPOCHS_LIMIT {
            return bad(format!(
                "max_epochs must be in 1..={}, got {}",
                Self::MAX_EPOCHS_LIMIT,
                self.max_epochs
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.l2_coefficient >= 0.0 && self.aux_weight >= 0.0 && self.loss_threshold >= 0.0) {
            return bad("l2_coefficient, aux_weight and loss_threshold must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!("val_fraction {} outside [0, 1)", self.val_fraction));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let p: TrainParams =
            serde_json::from_str(text).map_err(|e| Error::json("training hyperparameters", e))?;
        p.validate()?;
        Ok(p)
    }
}

/// The ablation grid: the default model plus eight single-factor variants.
pub fn ablation_configs() -> Vec<(String, ConformerConfig)> {
    let ours = ConformerConfig::default();
    let with = |f: &dyn Fn(&mut ConformerConfig)| {
        let mut c = ours;
        f(&mut c);
        c
    };
    vec![
        ("Ours".into(), ours),
        ("cnn layers: one".into(), with(&|c| c.n_pre_cnn_layers = 1)),
        (
            "cnn layers: three".into(),
            with(&|c| c.n_pre_cnn_layers = 3),
        ),
        (
            "cnn width: one".into(),
            with(&|c| c.cnn_width_multiplier = 1),
        ),
        (
            "cnn width: four".into(),
            with(&|c| c.cnn_width_multiplier = 4),
        ),
        (
            "Transformer layers: zero".into(),
            with(&|c| c.block_attention = false),
        ),
        (
            "Transformer layers: two".into(),
            with(&|c| c.n_conformer_blocks = 2),
        ),
        ("no CNN".into(), with(&|c| c.use_cnn_preproc = false)),
        (
            "no Transformer".into(),
            with(&|c| c.use_transformer_preproc = false),
        ),
    ]
}
