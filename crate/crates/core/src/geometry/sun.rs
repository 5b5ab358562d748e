use chrono::{DateTime, Utc};

use super::EcefVector;

const UNIX_EPOCH_JD: f64 = 2_440_587.5;
/// 2000-01-01T12:00:00Z
const J2000_UNIX: i64 = 946_728_000;

pub fn julian_date(epoch: &DateTime<Utc>) -> f64 {
    let secs = epoch.timestamp() as f64 + epoch.timestamp_subsec_nanos() as f64 * 1e-9;
    UNIX_EPOCH_JD + secs / 86_400.0
}

pub fn days_since_j2000(epoch: &DateTime<Utc>) -> f64 {
    // split to keep sub-millisecond resolution
    let secs = epoch.timestamp() - J2000_UNIX;
    secs as f64 / 86_400.0 + epoch.timestamp_subsec_nanos() as f64 * 1e-9 / 86_400.0
}

/// Greenwich mean sidereal time in [0, 2π), UT1 taken as UTC.
pub fn gmst_rad(epoch: &DateTime<Utc>) -> f64 {
    let d = days_since_j2000(epoch);
    let t = d / 36_525.0;
    let deg = 280.460_618_37 + 360.985_647_366_29 * d + 0.000_387_933 * t * t - t * t * t / 38_710_000.0;
    deg.rem_euclid(360.0).to_radians()
}

/// Unit vector towards the Sun in ECEF, from the low-precision almanac
/// series (about 0.01° in ecliptic longitude over 1950–2050).
pub fn solar_position_ecef(epoch: &DateTime<Utc>) -> EcefVector {
    let n = days_since_j2000(epoch);
    let l = (280.460 + 0.985_647_4 * n).rem_euclid(360.0);
    let g = (357.528 + 0.985_600_3 * n).rem_euclid(360.0).to_radians();
    let lambda = (l + 1.915 * g.sin() + 0.020 * (2.0 * g).sin()).to_radians();
    let eps = (23.439 - 0.000_000_4 * n).to_radians();

    let (sl, cl) = lambda.sin_cos();
    let eci = [cl, eps.cos() * sl, eps.sin() * sl];
    let (st, ct) = gmst_rad(epoch).sin_cos();
    EcefVector::new(ct * eci[0] + st * eci[1], -st * eci[0] + ct * eci[1], eci[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(y: i32, mo: u32, d: u32, h: u32, mi: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, mo, d, h, mi, 0).unwrap()
    }

    fn declination_deg(v: &EcefVector) -> f64 {
        v.z.asin().to_degrees()
    }

    #[test]
    fn gmst_at_j2000() {
        let g = gmst_rad(&at(2000, 1, 1, 12, 0)).to_degrees();
        assert!((g - 280.460_618_37).abs() < 1e-9, "{g}");
    }

    #[test]
    fn gmst_half_day_advance() {
        // 0.5 d at 360.98564736629 deg/d
        let a = gmst_rad(&at(2024, 3, 1, 0, 0));
        let b = gmst_rad(&at(2024, 3, 1, 12, 0));
        let adv = (b - a).rem_euclid(std::f64::consts::TAU).to_degrees();
        assert!((adv - 180.492_823_683).abs() < 1e-6, "{adv}");
    }

    #[test]
    fn gmst_sidereal_period() {
        let t0 = at(2024, 5, 5, 3, 0);
        let t1 = t0 + chrono::Duration::milliseconds(86_164_091);
        let d = (gmst_rad(&t1) - gmst_rad(&t0)).to_degrees();
        let d = (d + 180.0).rem_euclid(360.0) - 180.0;
        assert!(d.abs() < 0.01, "{d}");
    }

    #[test]
    fn solstice_and_equinox() {
        let s = solar_position_ecef(&at(2024, 6, 20, 20, 51));
        assert!((declination_deg(&s) - 23.44).abs() < 0.01);
        let e = solar_position_ecef(&at(2024, 3, 20, 3, 6));
        assert!(declination_deg(&e).abs() < 0.5);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noon_sun_is_near_local_meridian() {
        // near the March equinox the Sun crosses Greenwich at ~12:07 UTC
        let s = solar_position_ecef(&at(2024, 3, 20, 12, 7));
        let lon = s.y.atan2(s.x).to_degrees();
        assert!(lon.abs() < 0.5, "{lon}");
    }
}
