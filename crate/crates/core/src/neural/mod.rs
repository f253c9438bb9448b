//! Minimal tensor and layer library: explicit forward caches, hand-written
//! backward passes, Adam with decoupled decay, finite-difference gradient
//! checking and a flat checkpoint container.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod modules;
pub mod ops;
pub mod params;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckEntry, GradCheckReport};
pub use layers::{
    depthwise_conv1d_backward, depthwise_conv1d_forward, ffn_backward, ffn_forward, layer_norm,
    layer_norm_backward, linear_backward, linear_forward, mhsa_backward, mhsa_forward, MhsaParams,
};
pub use ops::{dropout, dropout_backward, mse_loss, sinusoidal_encoding, softmax_rows, Mode};
pub use params::{xavier_init, ParamId, ParamStore};
pub use tensor::{matmul, Tensor};
