//! Read-level simulation of a frequency-hopping backscatter link.
//!
//! A legitimate receiver holds the hop schedule and therefore knows the
//! channel of every read; an eavesdropper sees the same reads with the
//! channel stripped.

mod channel;
mod dataset;
mod gesture;
mod plan;
mod reads;

pub use channel::{
    rssi_model, theoretical_phase, theoretical_phase_unchecked, PathLoss, Reflector, ScenarioPreset,
};
pub use dataset::{
    gen_dataset, Dataset, DatasetManifest, Window, DATASET_FORMAT_VERSION, DEFAULT_WINDOW_LEN,
};
pub use gesture::{circle, line, random_gesture, stationary, GestureParams};
pub use plan::{channel_frequency, make_hop_schedule, ChannelPlan, HopSchedule};
pub use reads::{
    analytic_dehop, eavesdropper_view, frames_from_reads, simulate_reads, PhaseFrame, TagRead,
};
