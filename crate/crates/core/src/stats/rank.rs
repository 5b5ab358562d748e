//! Mann–Whitney U, Cliff's delta and the two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest per-sample size for which the exact null distribution of U is
/// used (tie-free samples only).
pub const EXACT_MAX_N: usize = 20;

/// Above this many pairs Cliff's delta switches to the sort-based count.
const DIRECT_PAIR_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MwuMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuResult {
    pub u_statistic: f64,
    pub p_two_sided: f64,
    pub method: MwuMethod,
    pub n_x: usize,
    pub n_y: usize,
    pub cliffs_delta: f64,
}

fn check_non_empty(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample(format!(
            "two-sample test needs both samples non-empty (n_x = {}, n_y = {})",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in two-sample test input".into()));
    }
    Ok(())
}

/// Midranks of the pooled sample, returned as (ranks of x, tie-group sizes).
fn pooled_midranks(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut x_ranks = Vec::with_capacity(x.len());
    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their average
        let rank = 0.5 * ((i + 1) + j) as f64;
        x_ranks.extend(pooled[i..j].iter().filter(|p| p.1).map(|_| rank));
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (x_ranks, ties)
}

/// U = #{x_i > y_j} + ½ #{x_i = y_j}, computed from pooled midranks.
pub fn u_statistic(x: &[f64], y: &[f64]) -> f64 {
    let (x_ranks, _) = pooled_midranks(x, y);
    let nx = x.len() as f64;
    x_ranks.iter().sum::<f64>() - nx * (nx + 1.0) / 2.0
}

/// Two-sided Mann–Whitney U test. Uses the exact null distribution for
/// tie-free samples with both sizes ≤ [`EXACT_MAX_N`], otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
pub fn mann_whitney(x: &[f64], y: &[f64]) -> Result<MwuResult> {
    check_non_empty(x, y)?;
    let (x_ranks, ties) = pooled_midranks(x, y);
    let nx = x.len();
    let ny = y.len();
    let u = x_ranks.iter().sum::<f64>() - (nx * (nx + 1)) as f64 / 2.0;

    let (p, method) = if nx <= EXACT_MAX_N && ny <= EXACT_MAX_N && ties.is_empty() {
        (exact_p(u.round() as usize, nx, ny), MwuMethod::Exact)
    } else {
        (normal_p(u, nx, ny, &ties), MwuMethod::Normal)
    };

    Ok(MwuResult {
        u_statistic: u,
        p_two_sided: p,
        method,
        n_x: nx,
        n_y: ny,
        cliffs_delta: cliffs_delta(x, y)?,
    })
}

/// Number of arrangements giving each value of U, for sample sizes m and n.
/// Recurrence on whether the largest pooled value belongs to x (adds n) or y.
fn u_frequencies(m: usize, n: usize) -> Vec<f64> {
    // table[i][j] holds the frequency vector for sizes (i, j)
    let mut table: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            let mut freq = vec![0.0; i * j + 1];
            if i == 0 || j == 0 {
                freq[0] = 1.0;
            } else {
                for (u, c) in table[i - 1][j].iter().enumerate() {
                    freq[u + j] += c;
                }
                for (u, c) in table[i][j - 1].iter().enumerate() {
                    freq[u] += c;
                }
            }
            table[i][j] = freq;
        }
    }
    std::mem::take(&mut table[m][n])
}

fn exact_p(u: usize, m: usize, n: usize) -> f64 {
    let freq = u_frequencies(m, n);
    let total: f64 = freq.iter().sum();
    let lower: f64 = freq[..=u].iter().sum::<f64>() / total;
    let upper: f64 = freq[u..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(u: f64, nx: usize, ny: usize, ties: &[usize]) -> f64 {
    let (nxf, nyf) = (nx as f64, ny as f64);
    let n = nxf + nyf;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = nxf * nyf / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let mu = nxf * nyf / 2.0;
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    normal_two_sided_p(z)
}

/// P(|Z| ≥ z) for a standard normal, accurate deep into the tail.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Cliff's δ = (#{x > y} − #{x < y}) / (n_x n_y). Small inputs use the direct
/// pair count, larger ones the sort-based count.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<f64> {
    check_non_empty(x, y)?;
    if x.len().saturating_mul(y.len()) <= DIRECT_PAIR_LIMIT {
        Ok(cliffs_delta_direct(x, y))
    } else {
        Ok(cliffs_delta_ranked(x, y))
    }
}

/// O(n_x n_y) pair enumeration. Panics on empty input.
pub fn cliffs_delta_direct(x: &[f64], y: &[f64]) -> f64 {
    let mut diff: i64 = 0;
    for &a in x {
        for &b in y {
            if a > b {
                diff += 1;
            } else if a < b {
                diff -= 1;
            }
        }
    }
    diff as f64 / (x.len() * y.len()) as f64
}

/// O((n_x + n_y) log n_y) count via binary search in sorted y.
pub fn cliffs_delta_ranked(x: &[f64], y: &[f64]) -> f64 {
    let mut ys = y.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut diff: i64 = 0;
    for &a in x {
        let below = ys.partition_point(|&b| b < a);
        let not_above = ys.partition_point(|&b| b <= a);
        let above = ys.len() - not_above;
        diff += below as i64 - above as i64;
    }
    diff as f64 / (x.len() * y.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_statistic: f64,
    /// Asymptotic two-sided p-value from the Kolmogorov limiting distribution.
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    check_non_empty(x, y)?;
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);

    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    let en = (nx * ny / (nx + ny)).sqrt();
    Ok(KsResult {
        d_statistic: d,
        p_value: kolmogorov_sf(en * d),
    })
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small λ
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=50 {
            let odd = (2 * k - 1) as f64;
            cdf += (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_case() {
        let r = mann_whitney(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert_eq!(r.method, MwuMethod::Exact);
        // 1 of 6 arrangements has U = 0; doubled lower tail
        assert!((r.p_two_sided - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.cliffs_delta, -1.0);
    }

    #[test]
    fn single_pair_is_p_one() {
        let r = mann_whitney(&[1.0], &[2.0]).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn all_ties() {
        let r = mann_whitney(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(r.u_statistic, 4.5);
        assert_eq!(r.cliffs_delta, 0.0);
        assert_eq!(r.method, MwuMethod::Normal);
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn empty_input_errors() {
        assert!(mann_whitney(&[], &[1.0]).is_err());
        assert!(cliffs_delta(&[1.0], &[]).is_err());
        assert!(ks_two_sample(&[], &[]).is_err());
    }

    #[test]
    fn cliff_examples() {
        assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cliffs_delta(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), -0.5);
    }

    #[test]
    fn frequencies_sum_to_binomial() {
        let f = u_frequencies(4, 3);
        assert_eq!(f.iter().sum::<f64>(), 35.0);
        // symmetric distribution
        let rev: Vec<f64> = f.iter().rev().copied().collect();
        assert_eq!(f, rev);
    }

    #[test]
    fn exact_largest_table_is_exact_in_f64() {
        let f = u_frequencies(20, 20);
        assert_eq!(f.iter().sum::<f64>(), 137_846_528_820.0);
    }

    #[test]
    fn normal_path_matches_reference_value() {
        // 25 vs 25 with a clean shift; reference p from scipy's
        // mannwhitneyu(method="asymptotic", use_continuity=True)
        let x: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..25).map(|i| i as f64 + 10.5).collect();
        let r = mann_whitney(&x, &y).unwrap();
        assert_eq!(r.method, MwuMethod::Normal);
        // U = 105 (pairs with x > y); mu = 312.5, sigma = sqrt(625*51/12)
        assert_eq!(r.u_statistic, 105.0);
        assert!((r.p_two_sided - 5.909644085596015e-05).abs() < 1e-12);
    }

    #[test]
    fn ks_identical_samples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = ks_two_sample(&x, &x).unwrap();
        assert_eq!(r.d_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        let x: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..200).map(|i| 1000.0 + i as f64).collect();
        let r = ks_two_sample(&x, &y).unwrap();
        assert_eq!(r.d_statistic, 1.0);
        assert!(r.p_value < 1e-80);
    }

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let a = kolmogorov_sf(1.1799999);
        let b = kolmogorov_sf(1.1800001);
        assert!((a - b).abs() < 1e-6);
        // Q(1.0) reference 0.26999967
        assert!((kolmogorov_sf(1.0) - 0.269_999_67).abs() < 1e-7);
    }
}
