use serde::{Deserialize, Serialize};

use super::{channel_seed_label, stacked_at};
use crate::catalogue::{per_satellite_median, Catalogue, FluxBasis, Population};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::stats::{bootstrap_median_ratio, ks_two_sample, mann_whitney, MwuResult, RatioWithCI, ResampleUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    RawPerDet,
    NormPerDet,
    RawPerSat,
    NormPerSat,
}

impl Reduction {
    pub const ALL: [Reduction; 4] = [Reduction::RawPerDet, Reduction::NormPerDet, Reduction::RawPerSat, Reduction::NormPerSat];

    fn basis(self) -> FluxBasis {
        match self {
            Reduction::RawPerDet | Reduction::RawPerSat => FluxBasis::Raw,
            _ => FluxBasis::RangeCorrected,
        }
    }

    fn per_satellite(self) -> bool {
        matches!(self, Reduction::RawPerSat | Reduction::NormPerSat)
    }

    pub fn label(self) -> &'static str {
        match self {
            Reduction::RawPerDet => "raw_per_det",
            Reduction::NormPerDet => "norm_per_det",
            Reduction::RawPerSat => "raw_per_sat",
            Reduction::NormPerSat => "norm_per_sat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub reduction: Reduction,
    pub n_dtc: usize,
    pub n_ku: usize,
    /// DTC/Ku-only ratio of medians.
    pub ratio: RatioWithCI,
    pub mwu: MwuResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelExcess {
    pub freq_mhz: f64,
    pub n_dtc: usize,
    pub n_ku: usize,
    pub ratio: RatioWithCI,
    pub ks_p: f64,
    pub mwu_p: f64,
    pub cliffs_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    pub headline: Reduction,
    pub reductions: Vec<ReductionResult>,
    /// Channels passing the minimum DTC count, range-corrected, per detection.
    pub per_channel: Vec<ChannelExcess>,
    /// Detection counts at every channel, before the per-channel cut.
    pub occupancy: Vec<(f64, usize, usize)>,
    pub min_channel_dtc: usize,
}

impl ExcessReport {
    pub fn headline_result(&self) -> &ReductionResult {
        self.reductions.iter().find(|r| r.reduction == self.headline).unwrap()
    }
}

fn samples(cat: &Catalogue, reduction: Reduction, r_ref: f64) -> (Vec<f64>, Vec<f64>) {
    let basis = reduction.basis();
    if reduction.per_satellite() {
        let vals = |p| per_satellite_median(cat, p, basis, r_ref).into_iter().map(|(_, m)| m).collect();
        (vals(Population::Dtc), vals(Population::KuOnly))
    } else {
        let vals = |p| cat.analysed_stacked(Some(p)).map(|e| e.flux(basis, r_ref)).collect();
        (vals(Population::Dtc), vals(Population::KuOnly))
    }
}

/// DTC versus Ku-only flux excess under the four reductions, plus the
/// per-channel table. The headline is the per-satellite range-corrected
/// reduction.
pub fn dtc_excess(cat: &Catalogue, cfg: &RunConfig) -> Result<ExcessReport> {
    let r_ref = cfg.range.reference_km;
    let res = cfg.resampling("excess");
    let mut reductions = Vec::new();
    for reduction in Reduction::ALL {
        let (x, y) = samples(cat, reduction, r_ref);
        if x.is_empty() || y.is_empty() {
            return Err(Error::EmptySample(format!(
                "excess needs both DTC and Ku-only detections (DTC {}, Ku-only {})",
                x.len(),
                y.len()
            )));
        }
        let mut ratio = bootstrap_median_ratio(&x, &y, &res.derived(reduction.label()))?;
        if reduction.per_satellite() {
            ratio.resample_unit = ResampleUnit::Satellite;
        }
        reductions.push(ReductionResult {
            reduction,
            n_dtc: x.len(),
            n_ku: y.len(),
            ratio,
            mwu: mann_whitney(&x, &y)?,
        });
    }

    let min_dtc = cfg.analysis.excess.min_channel_dtc;
    let mut per_channel = Vec::new();
    let mut occupancy = Vec::new();
    for freq in cat.channels() {
        let pick = |p| -> Vec<f64> { stacked_at(cat, freq, Some(p)).iter().map(|e| e.s_norm(r_ref)).collect() };
        let (x, y) = (pick(Population::Dtc), pick(Population::KuOnly));
        occupancy.push((freq, x.len(), y.len()));
        if x.len() < min_dtc || y.is_empty() {
            continue;
        }
        let mwu = mann_whitney(&x, &y)?;
        per_channel.push(ChannelExcess {
            freq_mhz: freq,
            n_dtc: x.len(),
            n_ku: y.len(),
            ratio: bootstrap_median_ratio(&x, &y, &res.derived(&channel_seed_label("channel", freq)))?,
            ks_p: ks_two_sample(&x, &y)?.p_value,
            mwu_p: mwu.p_two_sided,
            cliffs_delta: mwu.cliffs_delta,
        });
    }

    Ok(ExcessReport {
        headline: Reduction::NormPerSat,
        reductions,
        per_channel,
        occupancy,
        min_channel_dtc: min_dtc,
    })
}
