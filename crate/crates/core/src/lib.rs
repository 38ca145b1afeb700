//! Energy-efficient UAV data collection from mobile IoT devices.
//!
//! The pipeline has three layers:
//!
//! * [`channel`]: air-to-ground LoS probability, elevation geometry and the
//!   minimum uplink power a device needs to meet a QPSK bit error rate.
//! * [`clustering`]: capacity- and radius-constrained K-means that places one
//!   UAV per cluster so that the total device transmit power is minimal.
//! * [`fleet`]: optimal-transport matching of UAVs to new cluster centers under
//!   a distance-linear energy model, built on the exact transportation solver
//!   in [`otsolve`].
//!
//! [`scenario`] drives time-stepped experiments on top of these, and [`cli`]
//! holds the config format and the batch commands used by the `uavdc` binary.

pub mod channel;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod fleet;
pub mod geometry;
pub mod otsolve;
pub mod scenario;

pub use error::{Error, Result};
