//! Fine-channel isolation: per-bin statistics within one coarse channel,
//! the inter-bin z-score, and the adjacent-bin (T2) and per-satellite (T3)
//! mechanism tests built on the per-detection pivot.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::catalogue::{Catalogue, DetectionEvent, FluxBasis, Polarisation, N_FINE};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::stats::{mean, median, quantile, quantile_sorted, std_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineBin {
    pub index: u8,
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub p95: Option<f64>,
    /// Descriptive only: one feed label is shared by all bins of a detection.
    pub xx_fraction: Option<f64>,
    /// This bin against the other bins, same estimator as the target.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineChannelReport {
    pub coarse_freq_mhz: f64,
    pub flux_basis: FluxBasis,
    pub n_rows: usize,
    pub per_bin: Vec<FineBin>,
    pub target_index: u8,
    pub z_target: f64,
    pub inter_bin_mu: f64,
    pub inter_bin_sigma: f64,
    /// p95 of the target bin relative to the mean p95 of the other bins, minus one.
    pub p95_excess: Option<f64>,
    pub max_abs_z: f64,
    pub bonferroni_threshold: f64,
    /// Same family-wise level from the normal quantile, for reference.
    pub bonferroni_threshold_normal: f64,
}

/// Two-sided Bonferroni threshold for the leave-one-bin-out z over `n_bins`
/// bins. With `k = n_bins - 1` comparison bins the statistic is
/// sqrt((k+1)/k) times Student's t with k-1 degrees of freedom under
/// exchangeable normal bin means.
pub fn bonferroni_threshold(n_bins: usize, alpha: f64) -> f64 {
    let k = (n_bins - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, k - 1.0).expect("valid dof");
    ((k + 1.0) / k).sqrt() * t.inverse_cdf(1.0 - alpha / (2.0 * n_bins as f64))
}

pub fn bonferroni_threshold_normal(n_bins: usize, alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / (2.0 * n_bins as f64))
}

/// z of `means[target]` against the mean and sample standard deviation of
/// the other available bins.
fn leave_one_out_z(means: &[Option<f64>], target: usize) -> Option<(f64, f64, f64)> {
    let others: Vec<f64> = means
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target)
        .filter_map(|(_, m)| *m)
        .collect();
    if others.len() < 3 {
        return None;
    }
    let mu = mean(&others)?;
    let sigma = std_dev(&others)?;
    let m = means[target]?;
    (sigma > 0.0).then(|| ((m - mu) / sigma, mu, sigma))
}

fn fine_rows_at<'a>(cat: &'a Catalogue, freq: f64) -> Vec<&'a DetectionEvent> {
    cat.analysed(None).filter(|e| !e.is_stacked() && e.on_channel(freq)).collect()
}

fn scan_rows(rows: &[&DetectionEvent], freq: f64, target: u8, cfg: &RunConfig) -> Result<FineChannelReport> {
    let fc = &cfg.analysis.fine;
    if rows.len() < fc.min_rows {
        return Err(Error::InsufficientData(format!(
            "{freq:.3} MHz has {} fine rows, need {}",
            rows.len(),
            fc.min_rows
        )));
    }
    let r_ref = cfg.range.reference_km;
    let mut by_bin: Vec<Vec<(f64, bool)>> = vec![Vec::new(); N_FINE];
    for e in rows {
        by_bin[e.fine_channel_index as usize].push((e.flux(fc.flux_basis, r_ref), e.pol_feed == Polarisation::XX));
    }
    let mut per_bin: Vec<FineBin> = by_bin
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let flux: Vec<f64> = v.iter().map(|x| x.0).collect();
            FineBin {
                index: i as u8,
                n: v.len(),
                mean: mean(&flux),
                median: median(&flux),
                p95: quantile(&flux, 0.95),
                xx_fraction: (!v.is_empty()).then(|| v.iter().filter(|x| x.1).count() as f64 / v.len() as f64),
                z: None,
            }
        })
        .collect();
    let means: Vec<Option<f64>> = per_bin.iter().map(|b| b.mean).collect();
    for (i, b) in per_bin.iter_mut().enumerate() {
        b.z = leave_one_out_z(&means, i).map(|z| z.0);
    }
    let t = target as usize;
    let (z_target, mu, sigma) = leave_one_out_z(&means, t).ok_or_else(|| {
        Error::InsufficientData(format!("{freq:.3} MHz: target bin {target} or its comparison bins are empty"))
    })?;
    let other_p95: Vec<f64> = per_bin.iter().filter(|b| b.index != target).filter_map(|b| b.p95).collect();
    let p95_excess = per_bin[t].p95.zip(mean(&other_p95)).map(|(p, m)| p / m - 1.0);
    let max_abs_z = per_bin.iter().filter_map(|b| b.z).map(f64::abs).fold(0.0, f64::max);

    Ok(FineChannelReport {
        coarse_freq_mhz: freq,
        flux_basis: fc.flux_basis,
        n_rows: rows.len(),
        per_bin,
        target_index: target,
        z_target,
        inter_bin_mu: mu,
        inter_bin_sigma: sigma,
        p95_excess,
        max_abs_z,
        bonferroni_threshold: bonferroni_threshold(N_FINE, fc.alpha),
        bonferroni_threshold_normal: bonferroni_threshold_normal(N_FINE, fc.alpha),
    })
}

/// Per-bin statistics of the fine rows at one coarse channel and the
/// inter-bin z of `target_index` against the other 30 bins.
pub fn fine_channel_scan(cat: &Catalogue, coarse_freq: f64, target_index: u8, cfg: &RunConfig) -> Result<FineChannelReport> {
    scan_rows(&fine_rows_at(cat, coarse_freq), coarse_freq, target_index, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRow {
    pub freq_mhz: f64,
    pub n_rows: usize,
    pub z: Option<f64>,
    pub note: Option<String>,
}

/// The same z estimator at the target index in each control channel.
/// Channels that cannot be scanned keep a row with the reason.
pub fn cross_channel_control(cat: &Catalogue, control_freqs: &[f64], target_index: u8, cfg: &RunConfig) -> Vec<ControlRow> {
    control_freqs
        .iter()
        .map(|&f| {
            let rows = fine_rows_at(cat, f);
            let n_rows = rows.len();
            match scan_rows(&rows, f, target_index, cfg) {
                Ok(r) => ControlRow { freq_mhz: f, n_rows, z: Some(r.z_target), note: None },
                Err(e) => ControlRow { freq_mhz: f, n_rows, z: None, note: Some(e.to_string()) },
            }
        })
        .collect()
}

/// One detection's 31 fine-bin fluxes.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotedDetection {
    pub norad_id: u32,
    pub epoch_utc: DateTime<Utc>,
    pub bins: [f64; N_FINE],
}

/// Pivots the analysed fine rows at a channel into complete per-detection
/// vectors keyed by (satellite, epoch). Detections missing any bin are
/// dropped; the count of dropped detections is returned alongside.
pub fn pivot_detections(cat: &Catalogue, freq: f64, basis: FluxBasis, r_ref: f64) -> (Vec<PivotedDetection>, usize) {
    let mut map: BTreeMap<(u32, DateTime<Utc>), [Option<f64>; N_FINE]> = BTreeMap::new();
    for e in fine_rows_at(cat, freq) {
        map.entry((e.norad_id, e.epoch_utc)).or_insert([None; N_FINE])[e.fine_channel_index as usize] =
            Some(e.flux(basis, r_ref));
    }
    let total = map.len();
    let complete: Vec<PivotedDetection> = map
        .into_iter()
        .filter_map(|((norad_id, epoch_utc), bins)| {
            let mut out = [0.0; N_FINE];
            for (o, b) in out.iter_mut().zip(bins) {
                *o = b?;
            }
            Some(PivotedDetection { norad_id, epoch_utc, bins: out })
        })
        .collect();
    let dropped = total - complete.len();
    (complete, dropped)
}

/// Bins other than the target and its immediate neighbours.
fn baseline_bins(target: usize) -> Vec<usize> {
    (0..N_FINE).filter(|&b| b + 1 < target || b > target + 1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2Report {
    pub coarse_freq_mhz: f64,
    pub target_index: u8,
    pub n_detections: usize,
    pub n_incomplete: usize,
    pub bright_quantile: f64,
    pub p_cut: f64,
    pub n_bright: usize,
    pub bin_means: Vec<f64>,
    pub baseline_bins: Vec<u8>,
    pub baseline_mu: f64,
    pub baseline_sigma: f64,
    pub z: Vec<f64>,
    pub z_below: Option<f64>,
    pub z_target: f64,
    pub z_above: Option<f64>,
}

const MIN_BRIGHT: usize = 20;

/// Adjacent-bin coherence: among detections whose target-bin flux exceeds
/// the sample quantile, z of each bin mean against the bins outside the
/// target's immediate neighbourhood.
pub fn t2_adjacent_bin(cat: &Catalogue, coarse_freq: f64, target_index: u8, bright_quantile: f64, cfg: &RunConfig) -> Result<T2Report> {
    let t = target_index as usize;
    let (dets, n_incomplete) = pivot_detections(cat, coarse_freq, cfg.analysis.fine.flux_basis, cfg.range.reference_km);
    let mut target_flux: Vec<f64> = dets.iter().map(|d| d.bins[t]).collect();
    target_flux.sort_by(f64::total_cmp);
    let p_cut = quantile_sorted(&target_flux, bright_quantile)
        .ok_or_else(|| Error::InsufficientData(format!("{coarse_freq:.3} MHz: no complete detections")))?;
    let bright: Vec<&PivotedDetection> = dets.iter().filter(|d| d.bins[t] > p_cut).collect();
    if bright.len() < MIN_BRIGHT {
        return Err(Error::InsufficientData(format!(
            "bright subset has {} detections, need {MIN_BRIGHT}",
            bright.len()
        )));
    }
    let bin_means: Vec<f64> = (0..N_FINE)
        .map(|b| bright.iter().map(|d| d.bins[b]).sum::<f64>() / bright.len() as f64)
        .collect();
    let base = baseline_bins(t);
    let base_vals: Vec<f64> = base.iter().map(|&b| bin_means[b]).collect();
    let mu = mean(&base_vals).unwrap();
    let sigma = std_dev(&base_vals).unwrap();
    let z: Vec<f64> = bin_means.iter().map(|m| (m - mu) / sigma).collect();
    Ok(T2Report {
        coarse_freq_mhz: coarse_freq,
        target_index,
        n_detections: dets.len(),
        n_incomplete,
        bright_quantile,
        p_cut,
        n_bright: bright.len(),
        baseline_bins: base.iter().map(|&b| b as u8).collect(),
        baseline_mu: mu,
        baseline_sigma: sigma,
        z_below: t.checked_sub(1).map(|b| z[b]),
        z_target: z[t],
        z_above: z.get(t + 1).copied(),
        z,
        bin_means,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T3Report {
    pub coarse_freq_mhz: f64,
    pub target_index: u8,
    pub min_detections: usize,
    pub n_satellites: usize,
    /// (NORAD id, R) sorted by NORAD id.
    pub ratios: Vec<(u32, f64)>,
    pub median_r: f64,
    pub mean_r: f64,
    pub p95_r: f64,
    pub max_r: f64,
    pub outlier_ratio: f64,
    pub n_over_outlier: usize,
    /// Fine-channel z of the target after removing the outlier satellites.
    pub z_target_excluding: Option<f64>,
    pub top_decile_mean: f64,
    pub bottom_half_mean: f64,
    pub top_bottom_ratio: f64,
    pub excess_ratio: f64,
    pub frac_over_excess: f64,
}

const MIN_T3_SATELLITES: usize = 5;

/// Per-satellite ratio of mean target-bin flux to mean flux over the bins
/// outside the target's neighbourhood.
pub fn t3_satellite_ratios(cat: &Catalogue, coarse_freq: f64, target_index: u8, min_det: usize, cfg: &RunConfig) -> Result<T3Report> {
    if min_det < 2 {
        return Err(Error::InvalidInput("T3 needs min_det >= 2".into()));
    }
    let t = target_index as usize;
    let base = baseline_bins(t);
    let (dets, _) = pivot_detections(cat, coarse_freq, cfg.analysis.fine.flux_basis, cfg.range.reference_km);
    let mut by_sat: BTreeMap<u32, Vec<&PivotedDetection>> = BTreeMap::new();
    for d in &dets {
        by_sat.entry(d.norad_id).or_default().push(d);
    }
    let ratios: Vec<(u32, f64)> = by_sat
        .into_iter()
        .filter(|(_, v)| v.len() >= min_det)
        .map(|(id, v)| {
            let num = v.iter().map(|d| d.bins[t]).sum::<f64>() / v.len() as f64;
            let den = v.iter().flat_map(|d| base.iter().map(|&b| d.bins[b])).sum::<f64>() / (v.len() * base.len()) as f64;
            (id, num / den)
        })
        .collect();
    let n = ratios.len();
    if n < MIN_T3_SATELLITES {
        return Err(Error::InsufficientData(format!(
            "{n} satellites with >= {min_det} detections, need {MIN_T3_SATELLITES}"
        )));
    }
    let mut r: Vec<f64> = ratios.iter().map(|x| x.1).collect();
    r.sort_by(f64::total_cmp);
    let mc = &cfg.analysis.mechanism;
    let outliers: BTreeSet<u32> = ratios.iter().filter(|x| x.1 > mc.outlier_ratio).map(|x| x.0).collect();
    let z_target_excluding = {
        let rows: Vec<&DetectionEvent> = fine_rows_at(cat, coarse_freq)
            .into_iter()
            .filter(|e| !outliers.contains(&e.norad_id))
            .collect();
        scan_rows(&rows, coarse_freq, target_index, cfg).ok().map(|s| s.z_target)
    };
    let top_k = n.div_ceil(10);
    let bottom_k = (n / 2).max(1);
    let top_decile_mean = mean(&r[n - top_k..]).unwrap();
    let bottom_half_mean = mean(&r[..bottom_k]).unwrap();

    Ok(T3Report {
        coarse_freq_mhz: coarse_freq,
        target_index,
        min_detections: min_det,
        n_satellites: n,
        median_r: median(&r).unwrap(),
        mean_r: mean(&r).unwrap(),
        p95_r: quantile_sorted(&r, 0.95).unwrap(),
        max_r: r[n - 1],
        outlier_ratio: mc.outlier_ratio,
        n_over_outlier: outliers.len(),
        z_target_excluding,
        top_decile_mean,
        bottom_half_mean,
        top_bottom_ratio: top_decile_mean / bottom_half_mean,
        excess_ratio: mc.excess_ratio,
        frac_over_excess: r.iter().filter(|&&x| x > mc.excess_ratio).count() as f64 / n as f64,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_for_31_bins() {
        let t = bonferroni_threshold(31, 0.05);
        assert!((t - 3.536).abs() < 0.01, "{t}");
        let n = bonferroni_threshold_normal(31, 0.05);
        assert!((n - 3.1536).abs() < 1e-3, "{n}");
    }

    #[test]
    fn baseline_excludes_neighbourhood() {
        let b = baseline_bins(22);
        assert_eq!(b.len(), 28);
        assert!(!b.contains(&21) && !b.contains(&22) && !b.contains(&23));
        assert_eq!(baseline_bins(0).len(), 29);
    }

    #[test]
    fn loo_z() {
        let mut means: Vec<Option<f64>> = (0..31).map(|i| Some(if i % 2 == 0 { 1.0 } else { 3.0 })).collect();
        means[5] = None;
        let (z, mu, sigma) = leave_one_out_z(&means, 0).unwrap();
        assert!(sigma > 0.0);
        assert!((z - (1.0 - mu) / sigma).abs() < 1e-15);
        assert!(leave_one_out_z(&means, 5).is_none());
    }
}
