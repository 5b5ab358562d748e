//! Independent reference implementations, used only to validate the
//! production code. Each one follows a different route from the code it
//! checks: brute-force enumeration for the rank test, pair counting for
//! Cliff's δ, and a long periodic series with nutation and apparent sidereal
//! time for the Sun.

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::geometry::EcefVector;

pub const ORACLE_MWU_MAX_N: usize = 10;

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Two-sided exact Mann–Whitney p-value by enumerating every assignment of
/// the pooled ranks to the x sample. Tie-free inputs with at most ten
/// values in total.
pub fn oracle_mwu_exact(x: &[f64], y: &[f64]) -> Result<f64> {
    let (m, n) = (x.len(), y.len());
    if m == 0 || n == 0 || m + n > ORACLE_MWU_MAX_N {
        return Err(Error::InvalidInput(format!(
            "oracle needs non-empty samples with n_x + n_y <= {ORACLE_MWU_MAX_N}"
        )));
    }
    let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pooled.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("oracle requires tie-free samples".into()));
    }
    // U counts the (x, y) pairs with x above y; from ranks: sum of x ranks - m(m+1)/2
    let rank_sum = |ranks: &[usize]| ranks.iter().map(|r| r + 1).sum::<usize>() - m * (m + 1) / 2;
    let observed_ranks: Vec<usize> = pooled.iter().enumerate().filter(|(_, p)| p.1).map(|(i, _)| i).collect();
    let u_obs = rank_sum(&observed_ranks);

    let (mut below, mut above, mut total) = (0u64, 0u64, 0u64);
    let mut comb: Vec<usize> = (0..m).collect();
    loop {
        let u = rank_sum(&comb);
        total += 1;
        if u <= u_obs {
            below += 1;
        }
        if u >= u_obs {
            above += 1;
        }
        if !next_combination(&mut comb, m + n) {
            break;
        }
    }
    Ok((2.0 * below.min(above) as f64 / total as f64).min(1.0))
}

/// Cliff's δ by explicit enumeration of all pairs.
pub fn oracle_cliffs_delta(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0i64;
    for a in x {
        for b in y {
            s += match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s as f64 / (x.len() * y.len()) as f64
}

/// TT − UTC, seconds; adequate to a few seconds over 2015–2030 and to under
/// a minute across 1990–2060, which moves the Sun by < 0.001°.
const DELTA_T_S: f64 = 69.2;

struct Apparent {
    lambda_deg: f64,
    eps_deg: f64,
    dpsi_deg: f64,
}

const LON_AMP: [f64; 49] = [
    403406.0, 195207.0, 119433.0, 112392.0, 3891.0, 2819.0, 1721.0, 660.0, 350.0, 334.0, 314.0, 268.0, 242.0,
    234.0, 158.0, 132.0, 129.0, 114.0, 99.0, 93.0, 86.0, 78.0, 72.0, 68.0, 64.0, 46.0, 38.0, 37.0, 32.0, 29.0,
    28.0, 27.0, 27.0, 25.0, 24.0, 21.0, 21.0, 20.0, 18.0, 17.0, 14.0, 13.0, 13.0, 13.0, 12.0, 10.0, 10.0, 10.0,
    10.0,
];
const LON_PHASE: [f64; 49] = [
    270.54861, 340.19128, 63.91854, 331.26220, 317.843, 86.631, 240.052, 310.26, 247.23, 260.87, 297.82, 343.14,
    166.79, 81.53, 3.50, 132.75, 182.95, 162.03, 29.8, 266.4, 249.2, 157.6, 257.8, 185.1, 69.9, 8.0, 197.1,
    250.4, 65.3, 162.7, 341.5, 291.6, 98.5, 146.7, 110.0, 5.2, 342.6, 230.9, 256.1, 45.3, 242.9, 115.2, 151.8,
    285.3, 53.3, 126.6, 205.7, 85.9, 146.1,
];
const LON_RATE: [f64; 49] = [
    0.9287892, 35999.1376958, 35999.4089666, 35998.7287385, 71998.20261, 71998.4403, 36000.35726, 71997.4812,
    32964.4678, -19.4410, 445267.1117, 45036.8840, 3.1008, 22518.4434, -19.9739, 65928.9345, 9038.0293,
    3034.7684, 33718.148, 3034.448, -2280.773, 29929.992, 31556.493, 149.588, 9037.750, 107997.405, -4444.176,
    151.771, 67555.316, 31556.080, -4561.540, 107996.706, 1221.655, 62894.167, 31437.369, 14578.298, -31931.757,
    34777.243, 1221.999, 62894.511, -4442.039, 107997.909, 119.066, 16859.071, -4.578, 26895.292, -39.127,
    12297.536, 90073.778,
];

fn sin_deg(d: f64) -> f64 {
    d.to_radians().sin()
}

fn cos_deg(d: f64) -> f64 {
    d.to_radians().cos()
}

/// Apparent solar longitude and true obliquity from the Bretagnon–Simon
/// 49-term series, with aberration and the two leading nutation terms.
fn apparent(c: f64) -> Apparent {
    let series: f64 = (0..49)
        .map(|i| LON_AMP[i] * sin_deg(LON_PHASE[i] + LON_RATE[i] * c))
        .sum();
    let mean_lon = series * 0.000_005_729_577_951_308_232 + 282.777_183_4 + 36_000.769_537_44 * c;
    let aberration = 0.000_097_4 * cos_deg(177.63 + 35_999.018_48 * c) - 0.005_575;
    let omega = 124.90 - 1934.134 * c + 0.002_063 * c * c;
    let two_l = 201.11 + 72_001.537_7 * c + 0.000_57 * c * c;
    let dpsi = -0.004_778 * sin_deg(omega) - 0.000_366_7 * sin_deg(two_l);
    let deps = (9.20 * cos_deg(omega) + 0.57 * cos_deg(two_l)) / 3600.0;
    let eps0 = 23.0 + 26.0 / 60.0 + (21.448 - 46.815 * c - 0.000_59 * c * c + 0.001_813 * c * c * c) / 3600.0;
    Apparent {
        lambda_deg: (mean_lon + aberration + dpsi).rem_euclid(360.0),
        eps_deg: eps0 + deps,
        dpsi_deg: dpsi,
    }
}

/// Greenwich apparent sidereal time (rad) from the Earth rotation angle.
fn gast_rad(du: f64, t_tt: f64, dpsi_deg: f64, eps_deg: f64) -> f64 {
    let era = std::f64::consts::TAU * (0.779_057_273_264 + 0.002_737_811_911_354_48 * du + du.fract());
    let poly_arcsec = 0.014_506 + 4612.156_534 * t_tt + 1.391_581_7 * t_tt * t_tt
        - 0.000_000_44 * t_tt.powi(3)
        - 0.000_029_956 * t_tt.powi(4);
    let gmst = era + (poly_arcsec / 3600.0).to_radians();
    (gmst + (dpsi_deg * cos_deg(eps_deg)).to_radians()).rem_euclid(std::f64::consts::TAU)
}

/// Unit vector to the Sun in an Earth-fixed frame (polar motion ignored).
pub fn oracle_sun(epoch: &DateTime<Utc>) -> EcefVector {
    let du_int = (epoch.timestamp() - 946_728_000) as f64 / 86_400.0;
    let du = du_int + epoch.timestamp_subsec_nanos() as f64 * 1e-9 / 86_400.0;
    let c = (du + DELTA_T_S / 86_400.0) / 36_525.0;
    let a = apparent(c);

    let (sl, cl) = a.lambda_deg.to_radians().sin_cos();
    let (se, ce) = a.eps_deg.to_radians().sin_cos();
    let (x, y, z) = (cl, ce * sl, se * sl);
    let theta = gast_rad(du, c, a.dpsi_deg, a.eps_deg);
    let (st, ct) = theta.sin_cos();
    EcefVector::new(ct * x + st * y, -st * x + ct * y, z)
}

/// Shadow-cylinder membership via the cross product: a point is dark when
/// it lies behind the terminator plane and within `radius_m` of the axis.
pub fn oracle_eclipsed(sat: &EcefVector, sun: &EcefVector, radius_m: f64) -> bool {
    let s = sun.unit();
    let cross = EcefVector::new(sat.y * s.z - sat.z * s.y, sat.z * s.x - sat.x * s.z, sat.x * s.y - sat.y * s.x);
    sat.dot(&s) <= 0.0 && cross.norm() <= radius_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn mwu_small_cases() {
        assert!((oracle_mwu_exact(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(oracle_mwu_exact(&[1.0], &[2.0]).unwrap(), 1.0);
        assert!(oracle_mwu_exact(&[1.0; 6], &[2.0; 5]).is_err());
        assert!(oracle_mwu_exact(&[1.0, 2.0], &[2.0]).is_err());
    }

    #[test]
    fn cliffs_by_pairs() {
        assert_eq!(oracle_cliffs_delta(&[3.0, 4.0], &[1.0, 2.0]), 1.0);
        assert_eq!(oracle_cliffs_delta(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn solstice_declination() {
        let s = oracle_sun(&Utc.with_ymd_and_hms(2024, 6, 20, 20, 51, 0).unwrap());
        let dec = s.z.asin().to_degrees();
        assert!((dec - 23.44).abs() < 0.01, "{dec}");
    }

    #[test]
    fn equinox_declination() {
        let s = oracle_sun(&Utc.with_ymd_and_hms(2024, 3, 20, 3, 6, 0).unwrap());
        assert!(s.z.asin().to_degrees().abs() < 0.1);
    }

    #[test]
    fn j2000_longitude() {
        // apparent solar longitude at 2000-01-01 12:00 TT is 280.37 deg
        let a = apparent(0.0);
        assert!((a.lambda_deg - 280.37).abs() < 0.01, "{}", a.lambda_deg);
    }
}
