//! Topocentric pointing to sub-satellite point and illumination state.
//!
//! Frames: local east-north-up at the observatory, WGS-84 ECEF, and the
//! cylindrical Earth shadow along the Sun–Earth axis. Earth rotation uses
//! GMST with UT1 taken equal to UTC.

mod frames;
mod sun;
mod tag;

pub use frames::{ecef_to_geodetic, enu_from_azel, enu_to_ecef, geodetic_to_ecef, EcefVector, EnuVector, GeodeticCoord};
pub use sun::{days_since_j2000, gmst_rad, julian_date, solar_position_ecef};
pub use tag::{illuminated_fraction, tag_catalogue, tag_event};

use serde::{Deserialize, Serialize};

pub const WGS84_A_M: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// Equatorial Earth radius used for the shadow cylinder.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservatorySite {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
    pub ecef_m: EcefVector,
}

impl ObservatorySite {
    pub fn new(lat_deg: f64, lon_deg: f64, height_m: f64) -> crate::Result<Self> {
        if !(lat_deg.abs() <= 90.0) || !lon_deg.is_finite() || !height_m.is_finite() {
            return Err(crate::Error::InvalidInput(format!(
                "invalid site ({lat_deg}, {lon_deg}, {height_m})"
            )));
        }
        let ecef_m = geodetic_to_ecef(&GeodeticCoord {
            lat_deg,
            lon_deg,
            height_m,
        });
        Ok(ObservatorySite {
            lat_deg,
            lon_deg,
            height_m,
            ecef_m,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IlluminationState {
    Illuminated,
    Eclipsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminationTag {
    pub state: IlluminationState,
    pub p_parallel_m: f64,
    pub p_perp_m: f64,
    pub subsat: GeodeticCoord,
    /// Within the configured angular buffer of the shadow edge. Always false
    /// when no buffer is configured.
    #[serde(default)]
    pub near_terminator: bool,
}

/// Shadow cylinder parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowModel {
    pub earth_radius_m: f64,
    /// Optional angular half-width (degrees, at Earth's centre) around the
    /// shadow edge inside which detections are flagged.
    pub terminator_buffer_deg: Option<f64>,
}

impl Default for ShadowModel {
    fn default() -> Self {
        ShadowModel {
            earth_radius_m: EARTH_RADIUS_M,
            terminator_buffer_deg: None,
        }
    }
}

/// Shadow projections of a satellite: (p∥, p⊥) in metres.
fn shadow_projections(sat: &EcefVector, sun: &EcefVector) -> (f64, f64) {
    let s = sun.unit();
    let p_par = sat.dot(&s);
    let perp = sat.sub(&s.scale(p_par));
    (p_par, perp.norm())
}

/// Cylindrical shadow test with the default Earth radius. The subsatellite
/// point is filled from `sat_ecef`.
pub fn illumination_state(sat_ecef: &EcefVector, sun_ecef: &EcefVector) -> crate::Result<IlluminationTag> {
    illumination_state_with(sat_ecef, sun_ecef, &ShadowModel::default())
}

pub fn illumination_state_with(
    sat_ecef: &EcefVector,
    sun_ecef: &EcefVector,
    model: &ShadowModel,
) -> crate::Result<IlluminationTag> {
    if !(sun_ecef.norm() > 0.0) {
        return Err(crate::Error::InvalidInput("zero sun vector".into()));
    }
    let (p_par, p_perp) = shadow_projections(sat_ecef, sun_ecef);
    let r = model.earth_radius_m;
    // strict inequalities: the cylinder surface itself is in shadow
    let state = if p_par > 0.0 || p_perp > r {
        IlluminationState::Illuminated
    } else {
        IlluminationState::Eclipsed
    };

    let near_terminator = model.terminator_buffer_deg.is_some_and(|buf| {
        let dist = sat_ecef.norm();
        if dist <= r {
            return true;
        }
        // angle from the anti-solar axis, against the angle of the cylinder edge
        let alpha = p_perp.atan2(-p_par);
        let edge = (r / dist).asin();
        (alpha - edge).abs().to_degrees() <= buf
    });

    Ok(IlluminationTag {
        state,
        p_parallel_m: p_par,
        p_perp_m: p_perp,
        subsat: ecef_to_geodetic(sat_ecef)?,
        near_terminator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUN_X: EcefVector = EcefVector { x: 1.0, y: 0.0, z: 0.0 };

    #[test]
    fn sun_side_is_lit() {
        let sat = EcefVector::new(EARTH_RADIUS_M + 400e3, 0.0, 0.0);
        let tag = illumination_state(&sat, &SUN_X).unwrap();
        assert_eq!(tag.state, IlluminationState::Illuminated);
        assert!(tag.p_parallel_m > 0.0);
    }

    #[test]
    fn antisolar_point_is_dark() {
        let sat = EcefVector::new(-(EARTH_RADIUS_M + 400e3), 0.0, 0.0);
        let tag = illumination_state(&sat, &SUN_X).unwrap();
        assert_eq!(tag.state, IlluminationState::Eclipsed);
        assert_eq!(tag.p_perp_m, 0.0);
    }

    #[test]
    fn cylinder_edge() {
        let outside = EcefVector::new(-1000e3, EARTH_RADIUS_M + 1000.0, 0.0);
        assert_eq!(illumination_state(&outside, &SUN_X).unwrap().state, IlluminationState::Illuminated);
        let on_edge = EcefVector::new(-1000e3, 0.0, EARTH_RADIUS_M);
        assert_eq!(illumination_state(&on_edge, &SUN_X).unwrap().state, IlluminationState::Eclipsed);
    }

    #[test]
    fn zero_sun_rejected() {
        let sat = EcefVector::new(7e6, 0.0, 0.0);
        assert!(illumination_state(&sat, &EcefVector::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn terminator_buffer_flags_edge_only() {
        let model = ShadowModel {
            terminator_buffer_deg: Some(1.0),
            ..ShadowModel::default()
        };
        let r = EARTH_RADIUS_M + 500e3;
        let edge = (EARTH_RADIUS_M / r).asin();
        let at = |alpha: f64| EcefVector::new(-r * alpha.cos(), r * alpha.sin(), 0.0);
        let near = illumination_state_with(&at(edge + 0.5f64.to_radians()), &SUN_X, &model).unwrap();
        assert!(near.near_terminator);
        assert_eq!(near.state, IlluminationState::Illuminated);
        let far = illumination_state_with(&at(0.2), &SUN_X, &model).unwrap();
        assert!(!far.near_terminator);
        let none = illumination_state(&at(edge), &SUN_X).unwrap();
        assert!(!none.near_terminator);
    }

    #[test]
    fn site_ecef_matches_geodetic() {
        let site = ObservatorySite::new(-26.7039, 116.6707, 0.0).unwrap();
        let back = ecef_to_geodetic(&site.ecef_m).unwrap();
        assert!((back.lat_deg - site.lat_deg).abs() < 1e-9);
        assert!(ObservatorySite::new(91.0, 0.0, 0.0).is_err());
    }
}
