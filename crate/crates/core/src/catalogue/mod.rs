//! Detection catalogue: ingestion, bus classification, quality cuts and
//! range correction.

mod bus;
mod canonical;
mod parse;

pub use bus::{classify, parse_bus_table, BusEntry, BusTable};
pub use canonical::{read_canonical, write_canonical, CANONICAL_CSV, CANONICAL_META};
pub use parse::{parse_detections, ColumnMap, RejectReason, RowReject};

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{IlluminationState, IlluminationTag};

/// Fine-channel index of the stacked summary row.
pub const STACKED_INDEX: u8 = 31;
/// Number of fine bins per coarse channel (indices 0–30).
pub const N_FINE: usize = 31;
/// Two frequencies within this distance (MHz) name the same coarse channel.
pub const CHANNEL_MATCH_MHZ: f64 = 0.05;
pub const DEFAULT_REFERENCE_RANGE_KM: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarisation {
    XX,
    YY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    Dtc,
    KuOnly,
    V1x,
    Unclassified,
}

impl Population {
    pub const ALL: [Population; 4] = [Population::Dtc, Population::KuOnly, Population::V1x, Population::Unclassified];

    pub fn from_bus(label: &str) -> Population {
        match label.trim() {
            "V2MD" => Population::Dtc,
            "V2M" => Population::KuOnly,
            "V1.0" | "V1.5" => Population::V1x,
            _ => Population::Unclassified,
        }
    }

    /// Populations entering statistical subsets. The others are kept in the
    /// catalogue for audit only.
    pub fn is_analysed(self) -> bool {
        matches!(self, Population::Dtc | Population::KuOnly)
    }

    pub fn label(self) -> &'static str {
        match self {
            Population::Dtc => "DTC",
            Population::KuOnly => "Ku-only",
            Population::V1x => "v1.x",
            Population::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub norad_id: u32,
    pub epoch_utc: DateTime<Utc>,
    pub freq_mhz: f64,
    pub fine_channel_index: u8,
    pub pol_feed: Polarisation,
    pub flux_jy: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub range_km: f64,
    pub illumination: Option<IlluminationTag>,
}

impl DetectionEvent {
    pub fn is_stacked(&self) -> bool {
        self.fine_channel_index == STACKED_INDEX
    }

    pub fn on_channel(&self, freq_mhz: f64) -> bool {
        same_channel(self.freq_mhz, freq_mhz)
    }

    /// Range-corrected flux to `r_ref_km`.
    pub fn s_norm(&self, r_ref_km: f64) -> f64 {
        let k = self.range_km / r_ref_km;
        self.flux_jy * k * k
    }

    pub fn flux(&self, basis: FluxBasis, r_ref_km: f64) -> f64 {
        match basis {
            FluxBasis::Raw => self.flux_jy,
            FluxBasis::RangeCorrected => self.s_norm(r_ref_km),
        }
    }

    pub fn state(&self) -> Option<IlluminationState> {
        self.illumination.map(|t| t.state)
    }
}

pub fn same_channel(a_mhz: f64, b_mhz: f64) -> bool {
    (a_mhz - b_mhz).abs() <= CHANNEL_MATCH_MHZ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxBasis {
    Raw,
    #[default]
    RangeCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteRecord {
    pub norad_id: u32,
    pub bus_label: Option<String>,
    pub population: Population,
    pub launch_date: Option<NaiveDate>,
    /// Stacked detections in the catalogue (before population exclusion).
    pub n_detections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDigest {
    pub label: String,
    pub sha256: String,
    pub bytes: usize,
}

impl SourceDigest {
    pub fn of(label: &str, bytes: &[u8]) -> Self {
        use sha2::{Digest, Sha256};
        SourceDigest {
            label: label.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        }
    }
}

/// Counts of events removed by each quality cut, and of stacked events
/// retained but excluded from statistics by population.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutTally {
    pub input_events: usize,
    pub nonpositive_range: usize,
    pub nonpositive_flux: usize,
    pub nonpositive_elevation: usize,
    pub retained_events: usize,
    pub stacked_by_population: BTreeMap<Population, usize>,
    /// Stacked events of analysed populations after cuts.
    pub analysed_stacked: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<SourceDigest>,
    pub rejects: Vec<RowReject>,
    pub bus_duplicates: usize,
    pub cuts: Option<CutTally>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalogue {
    pub events: Vec<DetectionEvent>,
    pub satellites: BTreeMap<u32, SatelliteRecord>,
    pub provenance: Provenance,
}

impl Catalogue {
    pub fn population_of(&self, norad_id: u32) -> Population {
        self.satellites
            .get(&norad_id)
            .map_or(Population::Unclassified, |s| s.population)
    }

    pub fn stacked(&self) -> impl Iterator<Item = &DetectionEvent> {
        self.events.iter().filter(|e| e.is_stacked())
    }

    pub fn fine_rows(&self) -> impl Iterator<Item = &DetectionEvent> {
        self.events.iter().filter(|e| !e.is_stacked())
    }

    /// Events of the analysed populations (optionally one of them).
    pub fn analysed<'a>(&'a self, population: Option<Population>) -> impl Iterator<Item = &'a DetectionEvent> + 'a {
        self.events.iter().filter(move |e| {
            let p = self.population_of(e.norad_id);
            p.is_analysed() && population.is_none_or(|want| want == p)
        })
    }

    pub fn analysed_stacked<'a>(&'a self, population: Option<Population>) -> impl Iterator<Item = &'a DetectionEvent> + 'a {
        self.analysed(population).filter(|e| e.is_stacked())
    }

    /// Distinct coarse-channel frequencies of the stacked rows, ascending.
    pub fn channels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let mut freqs: Vec<f64> = self.stacked().map(|e| e.freq_mhz).collect();
        freqs.sort_by(f64::total_cmp);
        for f in freqs {
            if out.last().is_none_or(|&l| !same_channel(l, f)) {
                out.push(f);
            }
        }
        out
    }

    pub fn is_tagged(&self) -> bool {
        self.events.iter().all(|e| e.illumination.is_some())
    }
}

/// S_norm = S_obs (r_sat / r_ref)².
pub fn range_correct(s_obs: f64, r_sat_km: f64, r_ref_km: f64) -> Result<f64> {
    if !(r_sat_km > 0.0) {
        return Err(Error::InvalidInput(format!("range {r_sat_km} km must be positive")));
    }
    if !(r_ref_km > 0.0) {
        return Err(Error::InvalidInput(format!("reference range {r_ref_km} km must be positive")));
    }
    let k = r_sat_km / r_ref_km;
    Ok(s_obs * k * k)
}

/// Drops events with non-positive range, flux or elevation and records the
/// tally. Population exclusion is not applied here: those events stay in the
/// catalogue and are skipped by [`Catalogue::analysed`].
pub fn apply_quality_cuts(mut catalogue: Catalogue) -> Catalogue {
    let mut tally = CutTally {
        input_events: catalogue.events.len(),
        ..CutTally::default()
    };
    catalogue.events.retain(|e| {
        // NaN fails every comparison and is treated as non-positive
        if !(e.range_km > 0.0) {
            tally.nonpositive_range += 1;
            false
        } else if !(e.flux_jy > 0.0) {
            tally.nonpositive_flux += 1;
            false
        } else if !(e.elevation_deg > 0.0) {
            tally.nonpositive_elevation += 1;
            false
        } else {
            true
        }
    });
    tally.retained_events = catalogue.events.len();
    for e in catalogue.stacked() {
        *tally.stacked_by_population.entry(catalogue.population_of(e.norad_id)).or_default() += 1;
    }
    tally.analysed_stacked = catalogue.analysed_stacked(None).count();
    catalogue.provenance.cuts = Some(tally);
    catalogue
}

/// Median flux per satellite of `population`, over stacked rows.
pub fn per_satellite_median(
    catalogue: &Catalogue,
    population: Population,
    basis: FluxBasis,
    r_ref_km: f64,
) -> Vec<(u32, f64)> {
    let mut by_sat: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for e in catalogue.stacked() {
        if catalogue.population_of(e.norad_id) == population {
            by_sat.entry(e.norad_id).or_default().push(e.flux(basis, r_ref_km));
        }
    }
    by_sat
        .into_iter()
        .map(|(id, mut v)| (id, crate::stats::median_in_place(&mut v).unwrap()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn event(norad: u32, flux: f64, range: f64) -> DetectionEvent {
        DetectionEvent {
            norad_id: norad,
            epoch_utc: DateTime::from_timestamp(1_700_000_000, 0).unwrap(),
            freq_mhz: 230.46875,
            fine_channel_index: STACKED_INDEX,
            pol_feed: Polarisation::XX,
            flux_jy: flux,
            azimuth_deg: 10.0,
            elevation_deg: 45.0,
            range_km: range,
            illumination: None,
        }
    }

    fn sat(id: u32, pop: Population) -> (u32, SatelliteRecord) {
        (
            id,
            SatelliteRecord {
                norad_id: id,
                bus_label: None,
                population: pop,
                launch_date: None,
                n_detections: 0,
            },
        )
    }

    #[test]
    fn range_correction_examples() {
        assert_eq!(range_correct(10.0, 1000.0, 1000.0).unwrap(), 10.0);
        assert_eq!(range_correct(10.0, 2000.0, 1000.0).unwrap(), 40.0);
        assert_eq!(range_correct(40.0, 500.0, 1000.0).unwrap(), 10.0);
        assert!(range_correct(1.0, 0.0, 1000.0).is_err());
        assert!(range_correct(1.0, 10.0, -1.0).is_err());
    }

    #[test]
    fn population_mapping() {
        assert_eq!(Population::from_bus("V2MD"), Population::Dtc);
        assert_eq!(Population::from_bus("V2M"), Population::KuOnly);
        assert_eq!(Population::from_bus("V1.0"), Population::V1x);
        assert_eq!(Population::from_bus("V1.5"), Population::V1x);
        assert_eq!(Population::from_bus("V2MO"), Population::Unclassified);
    }

    #[test]
    fn cuts_tally_and_identity() {
        let clean = Catalogue {
            events: vec![event(1, 2.0, 800.0), event(2, 3.0, 900.0)],
            ..Catalogue::default()
        };
        let out = apply_quality_cuts(clean.clone());
        assert_eq!(out.events, clean.events);

        let dirty = Catalogue {
            events: vec![event(1, -1.0, 800.0), event(1, 1.0, 0.0), event(1, f64::NAN, 10.0), event(1, 1.0, 5.0)],
            ..Catalogue::default()
        };
        let out = apply_quality_cuts(dirty);
        let t = out.provenance.cuts.unwrap();
        assert_eq!((t.nonpositive_flux, t.nonpositive_range, t.retained_events), (2, 1, 1));
    }

    #[test]
    fn medians_per_satellite() {
        let mut cat = Catalogue::default();
        cat.satellites.extend([sat(1, Population::Dtc), sat(2, Population::Dtc), sat(3, Population::KuOnly)]);
        for f in [1.0, 2.0, 3.0] {
            cat.events.push(event(1, f, 1000.0));
        }
        for f in [1.0, 2.0, 3.0, 10.0] {
            cat.events.push(event(2, f, 1000.0));
        }
        cat.events.push(event(3, 7.0, 2000.0));
        let m = per_satellite_median(&cat, Population::Dtc, FluxBasis::Raw, 1000.0);
        assert_eq!(m, vec![(1, 2.0), (2, 2.5)]);
        let k = per_satellite_median(&cat, Population::KuOnly, FluxBasis::RangeCorrected, 1000.0);
        assert_eq!(k, vec![(3, 28.0)]);
        assert!(per_satellite_median(&cat, Population::V1x, FluxBasis::Raw, 1000.0).is_empty());
    }

    #[test]
    fn channel_list_merges_nearby() {
        let mut cat = Catalogue::default();
        for f in [230.46875, 230.469, 150.78125, 150.78] {
            let mut e = event(1, 1.0, 1.0);
            e.freq_mhz = f;
            cat.events.push(e);
        }
        assert_eq!(cat.channels().len(), 2);
    }
}
