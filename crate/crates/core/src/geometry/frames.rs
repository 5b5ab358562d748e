use serde::{Deserialize, Serialize};

use super::{ObservatorySite, WGS84_A_M, WGS84_F};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        EcefVector { x, y, z }
    }

    pub fn dot(&self, o: &EcefVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, k: f64) -> EcefVector {
        EcefVector::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn add(&self, o: &EcefVector) -> EcefVector {
        EcefVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(&self, o: &EcefVector) -> EcefVector {
        EcefVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn unit(&self) -> EcefVector {
        self.scale(1.0 / self.norm())
    }

    /// Angle to another vector in degrees.
    pub fn angle_deg(&self, o: &EcefVector) -> f64 {
        // atan2 of cross and dot stays accurate for tiny angles
        let c = EcefVector::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        );
        c.norm().atan2(self.dot(o)).to_degrees()
    }
}

/// Local east, north, up components (km).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnuVector {
    pub e: f64,
    pub n: f64,
    pub u: f64,
}

impl EnuVector {
    pub fn norm(&self) -> f64 {
        (self.e * self.e + self.n * self.n + self.u * self.u).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
}

pub fn enu_from_azel(azimuth_deg: f64, elevation_deg: f64, range_km: f64) -> EnuVector {
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    EnuVector {
        e: range_km * ce * sa,
        n: range_km * ce * ca,
        u: range_km * se,
    }
}

/// Rotates a local ENU offset (km) into ECEF and adds the site position.
/// Output is in metres.
pub fn enu_to_ecef(enu: &EnuVector, site: &ObservatorySite) -> EcefVector {
    let (sp, cp) = site.lat_deg.to_radians().sin_cos();
    let (sl, cl) = site.lon_deg.to_radians().sin_cos();
    let (e, n, u) = (enu.e * 1e3, enu.n * 1e3, enu.u * 1e3);
    let d = EcefVector::new(
        -sl * e - sp * cl * n + cp * cl * u,
        cl * e - sp * sl * n + cp * sl * u,
        cp * n + sp * u,
    );
    site.ecef_m.add(&d)
}

fn e2() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

pub fn geodetic_to_ecef(c: &GeodeticCoord) -> EcefVector {
    let (sp, cp) = c.lat_deg.to_radians().sin_cos();
    let (sl, cl) = c.lon_deg.to_radians().sin_cos();
    let n = WGS84_A_M / (1.0 - e2() * sp * sp).sqrt();
    EcefVector::new(
        (n + c.height_m) * cp * cl,
        (n + c.height_m) * cp * sl,
        (n * (1.0 - e2()) + c.height_m) * sp,
    )
}

const MAX_ITER: usize = 10;
const LAT_TOL_RAD: f64 = 1e-12;

fn normalise_lon(deg: f64) -> f64 {
    let l = deg.rem_euclid(360.0);
    if l > 180.0 {
        l - 360.0
    } else {
        l
    }
}

/// Iterative inverse: latitude and height are refined together until the
/// latitude update drops below 1e-12 rad.
pub fn ecef_to_geodetic(v: &EcefVector) -> Result<GeodeticCoord> {
    if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
        return Err(Error::InvalidInput("non-finite ECEF vector".into()));
    }
    let e2 = e2();
    let p = v.x.hypot(v.y);
    let lon = normalise_lon(v.y.atan2(v.x).to_degrees());

    if p < 1e-9 {
        let b = WGS84_A_M * (1.0 - WGS84_F);
        let lat = if v.z >= 0.0 { 90.0 } else { -90.0 };
        return Ok(GeodeticCoord {
            lat_deg: lat,
            lon_deg: lon,
            height_m: v.z.abs() - b,
        });
    }

    let mut lat = (v.z / (p * (1.0 - e2))).atan();
    for _ in 0..MAX_ITER {
        let (s, c) = lat.sin_cos();
        let n = WGS84_A_M / (1.0 - e2 * s * s).sqrt();
        let h = p * c + v.z * s - WGS84_A_M * (1.0 - e2 * s * s).sqrt();
        let next = (v.z / (p * (1.0 - e2 * n / (n + h)))).atan();
        let delta = (next - lat).abs();
        lat = next;
        if delta < LAT_TOL_RAD {
            let (s, c) = lat.sin_cos();
            let height_m = p * c + v.z * s - WGS84_A_M * (1.0 - e2 * s * s).sqrt();
            return Ok(GeodeticCoord {
                lat_deg: lat.to_degrees(),
                lon_deg: lon,
                height_m,
            });
        }
    }
    Err(Error::NoConvergence(MAX_ITER))
}
