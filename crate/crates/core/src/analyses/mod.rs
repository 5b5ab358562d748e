//! Population-level analyses. Each takes an immutable catalogue view and the
//! run configuration and returns a serialisable report. Repeated runs with
//! the same configuration are bitwise identical.

mod eclipse;
mod excess;
mod fine;
mod mechanism;
mod misc;
mod polarisation;

pub use eclipse::{
    eclipse_analysis, time_avg_factor, EclipseGroup, EclipseReport, InteractionSummary, PerSatelliteSummary, PopulationEclipse,
    Stratum, StratumKind,
};
pub use excess::{dtc_excess, ChannelExcess, ExcessReport, Reduction, ReductionResult};
pub use fine::{
    bonferroni_threshold, bonferroni_threshold_normal, cross_channel_control, fine_channel_scan, pivot_detections,
    t2_adjacent_bin, t3_satellite_ratios, ControlRow, FineBin, FineChannelReport, PivotedDetection, T2Report,
    T3Report,
};
pub use mechanism::{t1_harmonic_coincidence, T1Report, T1Row};
pub use misc::{dynamic_spectrum, thermal_flux_estimate, DynamicSpectrum, BOLTZMANN, JANSKY};
pub use polarisation::{polarisation_anomaly, ChannelTestResult, PolarisationReport};

use crate::catalogue::{Catalogue, DetectionEvent, Population};

/// Analysed stacked events at one coarse channel.
fn stacked_at<'a>(cat: &'a Catalogue, freq: f64, population: Option<Population>) -> Vec<&'a DetectionEvent> {
    cat.analysed_stacked(population).filter(|e| e.on_channel(freq)).collect()
}

fn channel_seed_label(prefix: &str, freq: f64) -> String {
    format!("{prefix}/{freq:.5}")
}
