//! Exact two-sided binomial tails and the Wilson score interval.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// How the two tails of an asymmetric binomial are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSidedConvention {
    /// Sum of the probabilities of all outcomes no more likely than the
    /// observed one.
    MinLikelihood,
    /// Twice the smaller one-sided tail, capped at one.
    #[default]
    DoubledOneTail,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BinomialTest {
    /// May underflow to zero; `log10_p` always carries the magnitude.
    pub p_value: f64,
    pub log10_p: f64,
    pub convention: TwoSidedConvention,
}

fn ln_pmf(k: u64, n: u64, ln_p: f64, ln_q: f64) -> f64 {
    ln_binomial(n, k) + k as f64 * ln_p + (n - k) as f64 * ln_q
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Two-sided exact binomial test of `k` successes in `n` trials against
/// success probability `p0`. Tail sums run in log space, so p-values far
/// below the smallest normal double keep their magnitude in `log10_p`.
pub fn binom_test(k: u64, n: u64, p0: f64, convention: TwoSidedConvention) -> Result<BinomialTest> {
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds n = {n}")));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidInput(format!("p0 = {p0} outside (0, 1)")));
    }
    let ln_p = p0.ln();
    let ln_q = (-p0).ln_1p();
    let pmf = |j: u64| ln_pmf(j, n, ln_p, ln_q);

    let ln_pvalue = match convention {
        TwoSidedConvention::MinLikelihood => {
            // relative slack absorbs rounding between equally likely outcomes
            let threshold = pmf(k) + 1e-7f64.ln_1p();
            log_sum_exp((0..=n).map(pmf).filter(|&lp| lp <= threshold))
        }
        TwoSidedConvention::DoubledOneTail => {
            let lower = log_sum_exp((0..=k).map(pmf));
            let upper = log_sum_exp((k..=n).map(pmf));
            std::f64::consts::LN_2 + lower.min(upper)
        }
    }
    .min(0.0);

    Ok(BinomialTest {
        p_value: ln_pvalue.exp(),
        log10_p: ln_pvalue / std::f64::consts::LN_10,
        convention,
    })
}

/// Two-sided binomial p-value under the default convention
/// ([`TwoSidedConvention::DoubledOneTail`]).
pub fn binom_two_sided(k: u64, n: u64, p0: f64) -> Result<f64> {
    binom_test(k, n, p0, TwoSidedConvention::default()).map(|t| t.p_value)
}

/// Wilson score interval for `k` successes in `n` trials, clipped to [0, 1].
pub fn wilson_interval(k: u64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::InvalidInput(format!("Wilson interval needs 0 <= k <= n, n >= 1 (k = {k}, n = {n})")));
    }
    if !(z > 0.0) {
        return Err(Error::InvalidInput(format!("z = {z} must be positive")));
    }
    let nf = n as f64;
    let p_hat = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p_hat + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // the closed form hits the boundaries only up to rounding
    let low = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if k == n { 1.0 } else { (centre + half).min(1.0) };
    Ok((low, high))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_gives_one() {
        for conv in [TwoSidedConvention::MinLikelihood, TwoSidedConvention::DoubledOneTail] {
            let t = binom_test(50, 100, 0.5, conv).unwrap();
            // min-likelihood sums the whole support, exact only up to rounding
            assert!((t.p_value - 1.0).abs() < 1e-12);
            assert!(t.log10_p <= 0.0 && t.log10_p > -1e-12);
        }
    }

    #[test]
    fn three_fair_coins() {
        // outcomes with pmf <= 1/8 are {0, 3}: p = 2/8
        for conv in [TwoSidedConvention::MinLikelihood, TwoSidedConvention::DoubledOneTail] {
            let t = binom_test(0, 3, 0.5, conv).unwrap();
            assert!((t.p_value - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn conventions_differ_for_skewed_null() {
        // k=2, n=10, p0=0.4: scipy binomtest gives 0.3335284; doubled lower
        // tail 2*P(X<=2) = 0.3345795
        let ml = binom_test(2, 10, 0.4, TwoSidedConvention::MinLikelihood).unwrap();
        let d = binom_test(2, 10, 0.4, TwoSidedConvention::DoubledOneTail).unwrap();
        assert!((ml.p_value - 0.333_528_371_2).abs() < 1e-8, "{}", ml.p_value);
        assert!((d.p_value - 0.334_579_507_2).abs() < 1e-8, "{}", d.p_value);
    }

    #[test]
    fn extreme_tail_keeps_magnitude() {
        let t = binom_test(0, 5000, 0.5, TwoSidedConvention::DoubledOneTail).unwrap();
        // 2 * 0.5^5000
        let expected = (2.0f64).log10() - 5000.0 * 2.0f64.log10();
        assert!((t.log10_p - expected).abs() < 1e-6);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(binom_two_sided(5, 4, 0.5).is_err());
        assert!(binom_two_sided(1, 4, 0.0).is_err());
        assert!(binom_two_sided(1, 4, 1.0).is_err());
        assert!(wilson_interval(1, 0, 1.96).is_err());
        assert!(wilson_interval(1, 2, 0.0).is_err());
    }

    #[test]
    fn wilson_boundaries() {
        let (lo, hi) = wilson_interval(0, 10, 1.96).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 1.0);
        let (lo, hi) = wilson_interval(10, 10, 1.96).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.0);
    }

    #[test]
    fn wilson_reference() {
        // statsmodels proportion_confint(3, 10, method="wilson")
        let (lo, hi) = wilson_interval(3, 10, 1.959_963_984_540_054).unwrap();
        assert!((lo - 0.107_791_3).abs() < 1e-6);
        assert!((hi - 0.603_221_9).abs() < 1e-6);
    }
}
