//! Evaluation toolkit for integrated sensing and communication links.
//!
//! The crate is organised bottom-up: [`scene`] holds geometry, [`waveform`]
//! the OFDM and array parameters, [`channel`] enumerates propagation paths,
//! [`bounds`] turns them into position error bounds and maps, [`latency`]
//! models processing placement, and [`impairments`] simulates PA distortion
//! and oscillator phase noise. [`scenarios`] builds the stock scenes.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod error;
pub mod impairments;
pub mod latency;
pub mod scenarios;
pub mod scene;
pub mod waveform;

pub use error::{BoundsError, ChannelError, ImpairmentError, LatencyError, SceneError, WaveformError};
