//! Forensic analysis of unintended electromagnetic radiation (UEMR) from
//! satellite constellations, starting from a per-detection radio event
//! catalogue.
//!
//! The crate is organised as a pipeline:
//!
//! * [`catalogue`] ingests detections and the bus-classification table,
//!   labels populations, applies quality cuts and range-corrects fluxes.
//! * [`geometry`] reconstructs the sub-satellite point and the solar
//!   illumination state of each detection.
//! * [`stats`] holds the rank tests, bootstrap machinery, binomial and FDR
//!   procedures used by the analyses.
//! * [`analyses`] composes the above into the population-level reports.
//! * [`synth`] generates synthetic catalogues with known ground truth and
//!   provides brute-force oracles used for validation.
//! * [`config`] is the run configuration shared by the CLI and the tests.

pub mod analyses;
pub mod catalogue;
pub mod config;
pub mod error;
pub mod geometry;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

/// Version tag embedded in every emitted JSON document.
pub const SCHEMA_VERSION: u32 = 1;
