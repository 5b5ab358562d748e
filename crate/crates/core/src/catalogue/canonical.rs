use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Catalogue, DetectionEvent, Polarisation, Provenance, SatelliteRecord};
use crate::error::{Error, Result};
use crate::geometry::{GeodeticCoord, IlluminationState, IlluminationTag};

pub const CANONICAL_CSV: &str = "catalogue.csv";
pub const CANONICAL_META: &str = "catalogue_meta.json";

#[derive(Serialize, Deserialize)]
struct Row {
    norad_id: u32,
    utc: DateTime<Utc>,
    freq_mhz: f64,
    fine_channel_index: u8,
    pol: Polarisation,
    flux_jy: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    range_km: f64,
    state: Option<IlluminationState>,
    p_parallel_m: Option<f64>,
    p_perp_m: Option<f64>,
    subsat_lat_deg: Option<f64>,
    subsat_lon_deg: Option<f64>,
    subsat_height_m: Option<f64>,
    near_terminator: Option<bool>,
}

impl From<&DetectionEvent> for Row {
    fn from(e: &DetectionEvent) -> Self {
        let t = e.illumination.as_ref();
        Row {
            norad_id: e.norad_id,
            utc: e.epoch_utc,
            freq_mhz: e.freq_mhz,
            fine_channel_index: e.fine_channel_index,
            pol: e.pol_feed,
            flux_jy: e.flux_jy,
            azimuth_deg: e.azimuth_deg,
            elevation_deg: e.elevation_deg,
            range_km: e.range_km,
            state: t.map(|t| t.state),
            p_parallel_m: t.map(|t| t.p_parallel_m),
            p_perp_m: t.map(|t| t.p_perp_m),
            subsat_lat_deg: t.map(|t| t.subsat.lat_deg),
            subsat_lon_deg: t.map(|t| t.subsat.lon_deg),
            subsat_height_m: t.map(|t| t.subsat.height_m),
            near_terminator: t.map(|t| t.near_terminator),
        }
    }
}

impl Row {
    fn into_event(self) -> DetectionEvent {
        let illumination = match (self.state, self.p_parallel_m, self.p_perp_m) {
            (Some(state), Some(p_par), Some(p_perp)) => Some(IlluminationTag {
                state,
                p_parallel_m: p_par,
                p_perp_m: p_perp,
                subsat: GeodeticCoord {
                    lat_deg: self.subsat_lat_deg.unwrap_or(f64::NAN),
                    lon_deg: self.subsat_lon_deg.unwrap_or(f64::NAN),
                    height_m: self.subsat_height_m.unwrap_or(f64::NAN),
                },
                near_terminator: self.near_terminator.unwrap_or(false),
            }),
            _ => None,
        };
        DetectionEvent {
            norad_id: self.norad_id,
            epoch_utc: self.utc,
            freq_mhz: self.freq_mhz,
            fine_channel_index: self.fine_channel_index,
            pol_feed: self.pol,
            flux_jy: self.flux_jy,
            azimuth_deg: self.azimuth_deg,
            elevation_deg: self.elevation_deg,
            range_km: self.range_km,
            illumination,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    schema_version: u32,
    n_events: usize,
    satellites: BTreeMap<u32, SatelliteRecord>,
    provenance: Provenance,
}

/// Writes `catalogue.csv` and `catalogue_meta.json` into `dir`.
pub fn write_canonical(catalogue: &Catalogue, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(CANONICAL_CSV))?;
    for e in &catalogue.events {
        w.serialize(Row::from(e))?;
    }
    w.flush()?;
    let meta = Meta {
        schema_version: crate::SCHEMA_VERSION,
        n_events: catalogue.events.len(),
        satellites: catalogue.satellites.clone(),
        provenance: catalogue.provenance.clone(),
    };
    fs::write(dir.join(CANONICAL_META), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_canonical(dir: &Path) -> Result<Catalogue> {
    let meta: Meta = serde_json::from_slice(&fs::read(dir.join(CANONICAL_META))?)?;
    let mut r = csv::Reader::from_path(dir.join(CANONICAL_CSV))?;
    let events = r
        .deserialize::<Row>()
        .map(|row| row.map(Row::into_event))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if events.len() != meta.n_events {
        return Err(Error::InvalidInput(format!(
            "canonical catalogue has {} rows, metadata says {}",
            events.len(),
            meta.n_events
        )));
    }
    Ok(Catalogue {
        events,
        satellites: meta.satellites,
        provenance: meta.provenance,
    })
}
