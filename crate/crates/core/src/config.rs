//! Run configuration. Loaded from TOML; every field has a default so a
//! partial file only overrides what it names.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::catalogue::{ColumnMap, FluxBasis};
use crate::error::{Error, Result};
use crate::geometry::{ObservatorySite, ShadowModel};
use crate::stats::{Resampling, TwoSidedConvention};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub paths: Paths,
    pub columns: ColumnMap,
    pub site: SiteConfig,
    pub stats: StatsConfig,
    pub range: RangeConfig,
    pub analysis: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: crate::SCHEMA_VERSION,
            paths: Paths::default(),
            columns: ColumnMap::default(),
            site: SiteConfig::default(),
            stats: StatsConfig::default(),
            range: RangeConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.stats.n_resamples < 100 {
            return bad("stats.n_resamples must be at least 100");
        }
        if !(self.stats.fdr_q > 0.0 && self.stats.fdr_q < 1.0) {
            return bad("stats.fdr_q must lie in (0, 1)");
        }
        if !(self.range.reference_km > 0.0) {
            return bad("range.reference_km must be positive");
        }
        if !(self.site.lat_deg.abs() <= 90.0) {
            return bad("site.lat_deg outside [-90, 90]");
        }
        let m = &self.analysis.mechanism;
        if !(m.tolerance_khz > 0.0) || m.fundamentals_khz.iter().any(|&f| !(f > 0.0)) {
            return bad("analysis.mechanism: fundamentals and tolerance must be positive");
        }
        if !(m.bright_quantile > 0.0 && m.bright_quantile < 1.0) {
            return bad("analysis.mechanism.bright_quantile must lie in (0, 1)");
        }
        if m.min_detections < 2 {
            return bad("analysis.mechanism.min_detections must be at least 2");
        }
        if self.analysis.fine.target_index > 30 {
            return bad("analysis.fine.target_index must be a fine bin 0-30");
        }
        Ok(())
    }

    pub fn observatory(&self) -> Result<ObservatorySite> {
        ObservatorySite::new(self.site.lat_deg, self.site.lon_deg, self.site.height_m)
    }

    pub fn shadow_model(&self) -> ShadowModel {
        ShadowModel {
            earth_radius_m: self.site.earth_radius_km * 1e3,
            terminator_buffer_deg: self.site.terminator_buffer_deg,
        }
    }

    /// Resampling settings for one named analysis, seeded from the master
    /// seed so analyses do not share streams.
    pub fn resampling(&self, analysis: &str) -> Resampling {
        Resampling::new(self.stats.n_resamples, crate::stats::derive_seed(self.stats.seed, analysis, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub detections: Option<PathBuf>,
    pub bus_table: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            detections: None,
            bus_table: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteConfig {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
    pub earth_radius_km: f64,
    pub terminator_buffer_deg: Option<f64>,
}

impl Default for SiteConfig {
    fn default() -> Self {
        SiteConfig {
            lat_deg: -26.7039,
            lon_deg: 116.6707,
            height_m: 0.0,
            earth_radius_km: 6378.137,
            terminator_buffer_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub n_resamples: usize,
    pub fdr_q: f64,
    pub wilson_z: f64,
    pub seed: u64,
    pub binomial_convention: TwoSidedConvention,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            n_resamples: 2000,
            fdr_q: 0.05,
            wilson_z: 1.96,
            seed: 42,
            binomial_convention: TwoSidedConvention::DoubledOneTail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangeConfig {
    pub reference_km: f64,
}

impl Default for RangeConfig {
    fn default() -> Self {
        RangeConfig { reference_km: 1000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub excess: ExcessConfig,
    pub polarisation: PolarisationConfig,
    pub fine: FineConfig,
    pub mechanism: MechanismConfig,
    pub eclipse: EclipseConfig,
    pub dynamic: DynamicConfig,
    pub thermal: ThermalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcessConfig {
    /// Per-channel rows need at least this many DTC detections.
    pub min_channel_dtc: usize,
}

impl Default for ExcessConfig {
    fn default() -> Self {
        ExcessConfig { min_channel_dtc: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    #[default]
    Pooled,
    LeaveOneOut,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarisationConfig {
    pub baseline: BaselineMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineConfig {
    pub target_freq_mhz: f64,
    pub target_index: u8,
    pub control_freqs_mhz: Vec<f64>,
    pub flux_basis: FluxBasis,
    pub min_rows: usize,
    /// Two-sided family-wise error rate across the 31 bins.
    pub alpha: f64,
}

impl Default for FineConfig {
    fn default() -> Self {
        FineConfig {
            target_freq_mhz: 230.46875,
            target_index: 22,
            control_freqs_mhz: vec![150.78125, 153.125, 161.71875, 170.3125, 200.0],
            flux_basis: FluxBasis::Raw,
            min_rows: 100,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismConfig {
    pub centroid_mhz: f64,
    pub tolerance_khz: f64,
    pub fundamentals_khz: Vec<f64>,
    pub crystal_khz: Vec<f64>,
    pub bright_quantile: f64,
    pub min_detections: usize,
    /// T3 outlier cut on the per-satellite ratio.
    pub outlier_ratio: f64,
    pub excess_ratio: f64,
}

pub const CLOCK_FUNDAMENTALS_KHZ: [f64; 14] = [
    27.5, 36.66, 55.0, 110.0, 220.0, 37.5, 50.0, 75.0, 150.0, 50.0, 150.0, 48.8, 65.0, 97.5,
];
pub const CRYSTAL_CANDIDATES_KHZ: [f64; 9] = [
    10_000.0, 13_000.0, 16_000.0, 20_000.0, 25_000.0, 27_000.0, 100_000.0, 12_288.0, 32.768,
];

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig {
            centroid_mhz: 230.627441,
            tolerance_khz: 12.207,
            fundamentals_khz: CLOCK_FUNDAMENTALS_KHZ.to_vec(),
            crystal_khz: CRYSTAL_CANDIDATES_KHZ.to_vec(),
            bright_quantile: 0.95,
            min_detections: 5,
            outlier_ratio: 2.0,
            excess_ratio: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EclipseConfig {
    pub matched_launch_start: NaiveDate,
    pub matched_launch_end: NaiveDate,
    pub altitude_start_km: f64,
    pub altitude_bin_km: f64,
    pub n_latitude_bins: usize,
    pub min_per_state_stratum: usize,
    pub min_per_state_frequency: usize,
    pub min_per_state_satellite: usize,
}

impl Default for EclipseConfig {
    fn default() -> Self {
        EclipseConfig {
            matched_launch_start: NaiveDate::from_ymd_opt(2024, 1, 3).unwrap(),
            matched_launch_end: NaiveDate::from_ymd_opt(2024, 10, 18).unwrap(),
            altitude_start_km: 300.0,
            altitude_bin_km: 56.0,
            n_latitude_bins: 5,
            min_per_state_stratum: 5,
            min_per_state_frequency: 30,
            min_per_state_satellite: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub norad_ids: Vec<u32>,
    pub freq_mhz: f64,
    pub pass_gap_s: f64,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            norad_ids: vec![60041, 60347],
            freq_mhz: 230.46875,
            pass_gap_s: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalConfig {
    pub emissivity: f64,
    pub temperature_k: f64,
    pub area_m2: f64,
    pub wavelength_m: f64,
    pub range_m: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            emissivity: 0.3,
            temperature_k: 300.0,
            area_m2: 100.0,
            wavelength_m: 1.3,
            range_m: 1e6,
        }
    }
}
