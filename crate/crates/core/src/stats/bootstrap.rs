//! Percentile bootstrap of median ratios, at the detection level and with
//! satellites as the resampling unit.
//!
//! Every iteration draws from its own ChaCha8 stream derived from
//! `(seed, label, iteration)`, so results do not depend on how iterations
//! are scheduled across threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median_in_place, quantile_sorted, stream_rng};
use crate::error::{Error, Result};

/// Fraction of undefined detection-level resamples tolerated before the
/// interval is refused.
const UNDEFINED_BUDGET: f64 = 0.05;

const CI_LOW: f64 = 0.025;
const CI_HIGH: f64 = 0.975;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Resampling {
    pub n_resamples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Resampling {
    pub fn new(n_resamples: usize, seed: u64) -> Self {
        Resampling {
            n_resamples,
            seed,
            execution: Execution::Parallel,
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Same settings with the seed replaced by a stream derived from it.
    pub fn derived(&self, label: &str) -> Self {
        Resampling {
            seed: super::derive_seed(self.seed, label, 0),
            ..*self
        }
    }
}

/// Runs `f` once per iteration with that iteration's generator. Output order
/// is iteration order regardless of `execution`.
pub fn resample_map<T, F>(res: &Resampling, label: &str, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let run = |i: usize| {
        let mut rng = stream_rng(res.seed, label, i as u64);
        f(&mut rng)
    };
    match res.execution {
        Execution::Parallel => (0..res.n_resamples).into_par_iter().map(run).collect(),
        Execution::Sequential => (0..res.n_resamples).map(run).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleUnit {
    Detection,
    Satellite,
}

/// Point estimate with a 95% percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioWithCI {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
    /// Resamples whose ratio was undefined and were left out of the interval.
    pub n_undefined: usize,
    pub resample_unit: ResampleUnit,
    pub seed: u64,
}

impl RatioWithCI {
    pub fn excludes(&self, value: f64) -> bool {
        value < self.ci_low || value > self.ci_high
    }
}

fn percentile_interval(mut values: Vec<f64>) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    (
        quantile_sorted(&values, CI_LOW).unwrap(),
        quantile_sorted(&values, CI_HIGH).unwrap(),
    )
}

fn draw_into(rng: &mut ChaCha8Rng, source: &[f64], buf: &mut Vec<f64>) {
    buf.clear();
    let n = source.len();
    buf.extend((0..n).map(|_| source[rng.random_range(0..n)]));
}

fn check_resamples(n: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::InvalidInput(format!("bootstrap needs at least 100 resamples, got {n}")));
    }
    Ok(())
}

/// median(x) / median(y) with a percentile interval from independent
/// with-replacement resampling of x and y.
pub fn bootstrap_median_ratio(x: &[f64], y: &[f64], res: &Resampling) -> Result<RatioWithCI> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample("median ratio needs both samples non-empty".into()));
    }
    check_resamples(res.n_resamples)?;
    let med_x = super::median(x).unwrap();
    let med_y = super::median(y).unwrap();
    if med_y == 0.0 {
        return Err(Error::InvalidInput("denominator sample has zero median".into()));
    }

    let ratios = resample_map(res, "median_ratio", |rng| {
        let mut bx = Vec::with_capacity(x.len());
        let mut by = Vec::with_capacity(y.len());
        draw_into(rng, x, &mut bx);
        draw_into(rng, y, &mut by);
        let my = median_in_place(&mut by).unwrap();
        (my != 0.0).then(|| median_in_place(&mut bx).unwrap() / my)
    });

    let valid: Vec<f64> = ratios.iter().flatten().copied().collect();
    let n_undefined = ratios.len() - valid.len();
    if n_undefined as f64 > UNDEFINED_BUDGET * ratios.len() as f64 {
        return Err(Error::TooManyUndefined {
            undefined: n_undefined,
            total: ratios.len(),
            budget: UNDEFINED_BUDGET * 100.0,
        });
    }
    let (ci_low, ci_high) = percentile_interval(valid);
    Ok(RatioWithCI {
        estimate: med_x / med_y,
        ci_low,
        ci_high,
        n_resamples: res.n_resamples,
        n_undefined,
        resample_unit: ResampleUnit::Detection,
        seed: res.seed,
    })
}

/// Detections of one satellite split by illumination state.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SatelliteGroup {
    pub id: u32,
    pub illuminated: Vec<f64>,
    pub eclipsed: Vec<f64>,
}

/// Pooled median(illuminated) / median(eclipsed) over a set of satellites.
/// `None` when either state is empty or the eclipsed median is zero.
pub fn pooled_state_ratio<'a>(groups: impl IntoIterator<Item = &'a SatelliteGroup>) -> Option<f64> {
    let mut illum = Vec::new();
    let mut ecl = Vec::new();
    for g in groups {
        illum.extend_from_slice(&g.illuminated);
        ecl.extend_from_slice(&g.eclipsed);
    }
    let me = median_in_place(&mut ecl)?;
    if me == 0.0 {
        return None;
    }
    Some(median_in_place(&mut illum)? / me)
}

fn draw_groups<'a>(rng: &mut ChaCha8Rng, groups: &'a [SatelliteGroup]) -> Vec<&'a SatelliteGroup> {
    let n = groups.len();
    (0..n).map(|_| &groups[rng.random_range(0..n)]).collect()
}

/// Cluster bootstrap of the pooled illuminated/eclipsed median ratio: each
/// resample draws whole satellites with replacement. Resamples lacking one
/// of the states are excluded and counted.
pub fn cluster_bootstrap_ratio(groups: &[SatelliteGroup], res: &Resampling) -> Result<RatioWithCI> {
    if groups.is_empty() {
        return Err(Error::EmptySample("cluster bootstrap needs at least one satellite".into()));
    }
    check_resamples(res.n_resamples)?;
    let estimate = pooled_state_ratio(groups).ok_or_else(|| {
        Error::InsufficientData("pooled ratio undefined: a state has no detections".into())
    })?;

    let ratios = resample_map(res, "cluster_ratio", |rng| {
        pooled_state_ratio(draw_groups(rng, groups))
    });
    let valid: Vec<f64> = ratios.iter().flatten().copied().collect();
    let n_undefined = ratios.len() - valid.len();
    if valid.is_empty() {
        return Err(Error::InsufficientData("every cluster resample was undefined".into()));
    }
    let (ci_low, ci_high) = percentile_interval(valid);
    Ok(RatioWithCI {
        estimate,
        ci_low,
        ci_high,
        n_resamples: res.n_resamples,
        n_undefined,
        resample_unit: ResampleUnit::Satellite,
        seed: res.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionResult {
    /// ratio_a − ratio_b
    pub diff: Interval,
    /// ratio_a / ratio_b
    pub ratio_of_ratios: Interval,
    pub p_two_sided: f64,
    pub n_resamples: usize,
    pub n_undefined: usize,
    pub seed: u64,
}

/// Joint cluster bootstrap of two populations drawn independently each
/// iteration. p = 2·min(Pr[Δ ≥ 0], Pr[Δ ≤ 0]), floored at 1/B.
pub fn interaction_test(
    groups_a: &[SatelliteGroup],
    groups_b: &[SatelliteGroup],
    res: &Resampling,
) -> Result<InteractionResult> {
    if groups_a.is_empty() || groups_b.is_empty() {
        return Err(Error::EmptySample("interaction test needs satellites on both sides".into()));
    }
    check_resamples(res.n_resamples)?;
    let undefined = || Error::InsufficientData("pooled ratio undefined for one side".into());
    let ra = pooled_state_ratio(groups_a).ok_or_else(undefined)?;
    let rb = pooled_state_ratio(groups_b).ok_or_else(undefined)?;

    let draws = resample_map(res, "interaction", |rng| {
        // independent sub-streams for the two sides
        let mut rng_a = super::stream_rng(rng.random(), "interaction/a", 0);
        let mut rng_b = super::stream_rng(rng.random(), "interaction/b", 0);
        let a = pooled_state_ratio(draw_groups(&mut rng_a, groups_a))?;
        let b = pooled_state_ratio(draw_groups(&mut rng_b, groups_b))?;
        (b != 0.0).then_some((a - b, a / b))
    });
    let valid: Vec<(f64, f64)> = draws.iter().flatten().copied().collect();
    let n_undefined = draws.len() - valid.len();
    if valid.is_empty() {
        return Err(Error::InsufficientData("every interaction resample was undefined".into()));
    }

    let n = valid.len() as f64;
    let ge = valid.iter().filter(|(d, _)| *d >= 0.0).count() as f64 / n;
    let le = valid.iter().filter(|(d, _)| *d <= 0.0).count() as f64 / n;
    let floor = 1.0 / res.n_resamples as f64;
    let p = (2.0 * ge.min(le)).clamp(floor, 1.0);

    let (d_lo, d_hi) = percentile_interval(valid.iter().map(|v| v.0).collect());
    let (r_lo, r_hi) = percentile_interval(valid.iter().map(|v| v.1).collect());
    Ok(InteractionResult {
        diff: Interval {
            estimate: ra - rb,
            ci_low: d_lo,
            ci_high: d_hi,
        },
        ratio_of_ratios: Interval {
            estimate: ra / rb,
            ci_low: r_lo,
            ci_high: r_hi,
        },
        p_two_sided: p,
        n_resamples: res.n_resamples,
        n_undefined,
        seed: res.seed,
    })
}
