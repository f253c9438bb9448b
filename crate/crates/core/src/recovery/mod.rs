//! Conformer-style network mapping hopped phase/RSSI reads back to
//! reference-frequency phase, with an auxiliary RSSI head, plus its
//! training recipe and ablation grid.

pub mod config;
pub mod features;
pub mod gradsuite;
pub mod model;
pub mod pipeline;
pub mod train;

pub use config::{ablation_configs, ConformerConfig, TrainParams};
pub use gradsuite::{gradient_suite, SuiteEntry, DEFAULT_TOLERANCE, LINEAR_TOLERANCE};
pub use model::{
    build_model, grad_check_model, loss, unit_pair, LossParts, Outputs, Recovered, RecoveryModel,
};
pub use pipeline::recover_frames;
pub use train::{
    evaluate, split_indices, train, EpochRecord, StopReason, TrainReport, TrainingSet,
};
