//! Statistical machinery: rank tests, effect sizes, percentile and cluster
//! bootstrap, exact binomial tails, Benjamini–Hochberg control and Wilson
//! intervals. Every resampling routine is deterministic under its seed and
//! gives bit-identical results whether iterations run in parallel or not.

mod binomial;
mod bootstrap;
mod fdr;
mod rank;
mod seed;

pub use binomial::{binom_test, binom_two_sided, wilson_interval, BinomialTest, TwoSidedConvention};
pub use bootstrap::{
    bootstrap_median_ratio, cluster_bootstrap_ratio, interaction_test, pooled_state_ratio,
    resample_map, Execution, Interval, InteractionResult, RatioWithCI, ResampleUnit, Resampling,
    SatelliteGroup,
};
pub use fdr::bh_fdr;
pub use rank::{
    cliffs_delta, cliffs_delta_direct, cliffs_delta_ranked, ks_two_sample, mann_whitney,
    normal_two_sided_p, u_statistic, KsResult, MwuMethod, MwuResult, EXACT_MAX_N,
};
pub use seed::{derive_seed, stream_rng};

/// Median of a sample; the mean of the two central order statistics for
/// even counts. `None` for an empty sample.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut buf = values.to_vec();
    median_in_place(&mut buf)
}

/// Like [`median`], but reorders `values` instead of copying.
pub fn median_in_place(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (lower, upper_mid, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper_mid = *upper_mid;
    if n % 2 == 1 {
        Some(upper_mid)
    } else {
        let lower_mid = lower.iter().copied().max_by(f64::total_cmp).unwrap();
        Some(0.5 * (lower_mid + upper_mid))
    }
}

/// Quantile of an ascending-sorted sample by linear interpolation between
/// order statistics (the `(n-1)p` rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let p = p.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Quantile of an unsorted sample, see [`quantile_sorted`].
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Sample standard deviation (n − 1 denominator). `None` below two values.
pub fn std_dev(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (n - 1) as f64).sqrt())
}
