//! Photon-number statistics of photon-pair sources.
//!
//! The crate synthesizes photon-number distributions (PNDs) of filtered
//! pair sources from their joint spectral amplitude, maps them to click
//! statistics of beam-splitter/detector setups, and reconstructs the PND
//! from observed counts by maximum likelihood.

pub mod bootstrap;
pub mod detection;
pub mod error;
pub mod estimator;
pub mod jsd;
pub mod metrics;
pub mod pnd;
pub mod simulator;

pub use error::{Error, Result};
