//! Hybrid discrete/continuous-variable QKD simulation.
//!
//! One Sagnac transmitter serves both modes: polarization encoding for the
//! three-state decoy protocol, or phase encoding for QPSK coherent states.
//! The crate models the transmitter, the channel, both receivers, parameter
//! estimation, key-rate bounds, and mode selection over a network of links.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod channel;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod math;
pub mod planner;
pub mod rates;
pub mod receivers;

pub use error::{Error, Result};
