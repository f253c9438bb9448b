//! Frequency-hopping RFID backscatter toolkit.
//!
//! - [`rfsim`] simulates hopped phase/RSSI reads of a moving tag and builds
//!   windowed training sets.
//! - [`neural`] is a small tensor/layer library with hand-written backward
//!   passes, Adam and finite-difference checking.
//! - [`recovery`] is the Conformer-style network that maps hopped reads back
//!   to reference-frequency phase (plus an auxiliary RSSI head).
//! - [`locate`] finds the initial tag position by maximizing a phase
//!   confidence score over a grid, then tracks it from phase differences.
//! - [`evalx`] holds metrics, baselines, the ablation runner and reports.

// `!(x >= 0.0)` is the idiom used for validation: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evalx;
pub mod geom;
pub mod io;
pub mod locate;
pub mod neural;
pub mod recovery;
pub mod rfsim;
pub mod rng;

pub use config::{SystemConfig, SPEED_OF_LIGHT};
pub use error::{Error, Result};
pub use geom::{phase_distance, signed_wrap, wrap_phase, Position2D, Trajectory, WorkspaceGrid};
