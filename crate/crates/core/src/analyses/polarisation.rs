use serde::{Deserialize, Serialize};

use crate::catalogue::{same_channel, Catalogue, Polarisation};
use crate::config::{BaselineMode, RunConfig};
use crate::error::Result;
use crate::stats::{bh_fdr, binom_test, wilson_interval, TwoSidedConvention};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTestResult {
    pub freq_mhz: f64,
    pub n: u64,
    pub n_xx: u64,
    pub xx_fraction: f64,
    pub baseline: f64,
    pub deviation: f64,
    pub p_value: f64,
    pub log10_p: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub bh_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarisationReport {
    pub baseline_mode: BaselineMode,
    pub pooled_baseline: f64,
    pub convention: TwoSidedConvention,
    pub fdr_q: f64,
    pub rows: Vec<ChannelTestResult>,
    pub n_flagged: usize,
    pub notes: Vec<String>,
}

/// Per-channel XX-fraction test against the instrumental baseline, with BH
/// control across channels. `channels` defaults to every channel present.
pub fn polarisation_anomaly(
    cat: &Catalogue,
    mode: BaselineMode,
    channels: Option<&[f64]>,
    cfg: &RunConfig,
) -> Result<PolarisationReport> {
    let events: Vec<(f64, bool)> = cat
        .analysed_stacked(None)
        .map(|e| (e.freq_mhz, e.pol_feed == Polarisation::XX))
        .collect();
    let total = events.len() as u64;
    let total_xx = events.iter().filter(|e| e.1).count() as u64;
    let pooled = total_xx as f64 / total as f64;
    let channels = channels.map_or_else(|| cat.channels(), <[f64]>::to_vec);
    let conv = cfg.stats.binomial_convention;

    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for freq in channels {
        let n = events.iter().filter(|e| same_channel(e.0, freq)).count() as u64;
        if n == 0 {
            notes.push(format!("{freq:.3} MHz: no detections, skipped"));
            continue;
        }
        let k = events.iter().filter(|e| e.1 && same_channel(e.0, freq)).count() as u64;
        let baseline = match mode {
            BaselineMode::Pooled => pooled,
            BaselineMode::LeaveOneOut => (total_xx - k) as f64 / (total - n) as f64,
        };
        let (p_value, log10_p) = match binom_test(k, n, baseline, conv) {
            Ok(t) => (t.p_value, t.log10_p),
            Err(e) => {
                notes.push(format!("{freq:.3} MHz: {e}"));
                (f64::NAN, f64::NAN)
            }
        };
        let (wilson_low, wilson_high) = wilson_interval(k, n, cfg.stats.wilson_z)?;
        let xx_fraction = k as f64 / n as f64;
        rows.push(ChannelTestResult {
            freq_mhz: freq,
            n,
            n_xx: k,
            xx_fraction,
            baseline,
            deviation: xx_fraction - baseline,
            p_value,
            log10_p,
            wilson_low,
            wilson_high,
            bh_flag: false,
        });
    }

    // rank on log10 p so underflowed tails still order correctly
    let keys: Vec<f64> = rows.iter().map(|r| 10f64.powf(r.log10_p.max(-300.0))).collect();
    let flags = bh_fdr(&keys, cfg.stats.fdr_q);
    for (r, f) in rows.iter_mut().zip(flags) {
        r.bh_flag = f;
    }
    Ok(PolarisationReport {
        baseline_mode: mode,
        pooled_baseline: pooled,
        convention: conv,
        fdr_q: cfg.stats.fdr_q,
        n_flagged: rows.iter().filter(|r| r.bh_flag).count(),
        rows,
        notes,
    })
}
