use std::io::Read;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Catalogue, DetectionEvent, Polarisation, Provenance, SourceDigest, STACKED_INDEX};
use crate::error::{Error, Result};

/// Header names of the semantic detection fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub norad_id: String,
    pub utc: String,
    pub freq_mhz: String,
    pub fine_channel_index: String,
    pub pol: String,
    pub flux_jy: String,
    pub azimuth_deg: String,
    pub elevation_deg: String,
    pub range_km: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            norad_id: "norad_id".into(),
            utc: "utc".into(),
            freq_mhz: "freq_mhz".into(),
            fine_channel_index: "fine_channel_index".into(),
            pol: "pol".into(),
            flux_jy: "flux_jy".into(),
            azimuth_deg: "azimuth_deg".into(),
            elevation_deg: "elevation_deg".into(),
            range_km: "range_km".into(),
        }
    }
}

impl ColumnMap {
    fn fields(&self) -> [(&'static str, &str); 9] {
        [
            ("norad_id", &self.norad_id),
            ("utc", &self.utc),
            ("freq_mhz", &self.freq_mhz),
            ("fine_channel_index", &self.fine_channel_index),
            ("pol", &self.pol),
            ("flux_jy", &self.flux_jy),
            ("azimuth_deg", &self.azimuth_deg),
            ("elevation_deg", &self.elevation_deg),
            ("range_km", &self.range_km),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingRange,
    MissingFlux,
    MissingField,
    BadNoradId,
    BadTimestamp,
    BadNumber,
    BadChannelIndex,
    BadPolarisation,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReject {
    /// 1-based line number in the source, header included.
    pub line: u64,
    pub reason: RejectReason,
    pub detail: String,
}

pub(crate) fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    let s = s.trim_end_matches('Z');
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|n| n.and_utc())
}

fn parse_pol(s: &str) -> Option<Polarisation> {
    match s.trim().to_ascii_uppercase().as_str() {
        "XX" | "X" => Some(Polarisation::XX),
        "YY" | "Y" => Some(Polarisation::YY),
        _ => None,
    }
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    idx: &'a [usize; 9],
}

impl Row<'_> {
    fn cell(&self, k: usize) -> &str {
        self.rec.get(self.idx[k]).unwrap_or("").trim()
    }

    fn number(&self, k: usize, name: &str, empty: RejectReason) -> std::result::Result<f64, (RejectReason, String)> {
        let raw = self.cell(k);
        if raw.is_empty() {
            return Err((empty, format!("{name} is empty")));
        }
        raw.parse::<f64>()
            .map_err(|_| (RejectReason::BadNumber, format!("{name} = {raw:?}")))
    }
}

fn parse_row(row: &Row) -> std::result::Result<DetectionEvent, (RejectReason, String)> {
    let norad_raw = row.cell(0);
    let norad_id = norad_raw
        .parse::<u32>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or((RejectReason::BadNoradId, format!("norad_id = {norad_raw:?}")))?;
    let ts_raw = row.cell(1);
    let epoch_utc = parse_timestamp(ts_raw).ok_or((RejectReason::BadTimestamp, format!("utc = {ts_raw:?}")))?;
    let freq_mhz = row.number(2, "freq_mhz", RejectReason::MissingField)?;
    let fine_raw = row.cell(3);
    let fine_channel_index = fine_raw
        .parse::<u8>()
        .ok()
        .filter(|&i| i <= STACKED_INDEX)
        .ok_or((RejectReason::BadChannelIndex, format!("fine_channel_index = {fine_raw:?}")))?;
    let pol_raw = row.cell(4);
    let pol_feed = parse_pol(pol_raw).ok_or((RejectReason::BadPolarisation, format!("pol = {pol_raw:?}")))?;
    let flux_jy = row.number(5, "flux_jy", RejectReason::MissingFlux)?;
    let azimuth_deg = row.number(6, "azimuth_deg", RejectReason::MissingField)?;
    let elevation_deg = row.number(7, "elevation_deg", RejectReason::MissingField)?;
    let range_km = row.number(8, "range_km", RejectReason::MissingRange)?;
    Ok(DetectionEvent {
        norad_id,
        epoch_utc,
        freq_mhz,
        fine_channel_index,
        pol_feed,
        flux_jy,
        azimuth_deg: azimuth_deg.rem_euclid(360.0),
        elevation_deg,
        range_km,
        illumination: None,
    })
}

/// Parses a detection CSV. Rows that fail to parse are recorded in
/// `provenance.rejects` with a reason code; a missing mapped column is fatal.
pub fn parse_detections<R: Read>(mut source: R, columns: &ColumnMap) -> Result<Catalogue> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes.as_slice());
    let headers = reader.headers()?.clone();
    let header_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();

    let mut idx = [0usize; 9];
    for (slot, (field, name)) in idx.iter_mut().zip(columns.fields()) {
        *slot = header_names
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                field: field.to_string(),
                header: name.to_string(),
            })?;
    }

    let mut events = Vec::new();
    let mut rejects = Vec::new();
    let mut rec = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {
                let line = rec.position().map_or(0, |p| p.line());
                match parse_row(&Row { rec: &rec, idx: &idx }) {
                    Ok(ev) => events.push(ev),
                    Err((reason, detail)) => rejects.push(RowReject { line, reason, detail }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejects.push(RowReject {
                    line,
                    reason: RejectReason::Malformed,
                    detail: e.to_string(),
                });
            }
        }
    }
    if !rejects.is_empty() {
        log::warn!("{} detection rows rejected", rejects.len());
    }

    Ok(Catalogue {
        events,
        satellites: Default::default(),
        provenance: Provenance {
            sources: vec![SourceDigest::of("detections", &bytes)],
            rejects,
            ..Provenance::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "norad_id,utc,freq_mhz,fine_channel_index,pol,flux_jy,azimuth_deg,elevation_deg,range_km\n";

    #[test]
    fn three_clean_rows() {
        let csv = format!(
            "{HEADER}60041,2024-05-01T12:00:00Z,230.46875,31,XX,120.5,10,45,800\n\
             60041,2024-05-01T12:00:02Z,230.46875,22,YY,99,11,46,790.5\n\
             55555,2024-05-01 12:00:04,150.78125,31,X,3.5,359.5,20,1500\n"
        );
        let cat = parse_detections(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(cat.events.len(), 3);
        assert!(cat.provenance.rejects.is_empty());
        assert_eq!(cat.events[1].pol_feed, Polarisation::YY);
        assert_eq!(cat.events[2].pol_feed, Polarisation::XX);
        assert_eq!(cat.provenance.sources[0].sha256.len(), 64);
    }

    #[test]
    fn missing_range_is_rejected_with_reason() {
        let csv = format!(
            "{HEADER}1,2024-05-01T12:00:00Z,230.5,31,XX,1,10,45,800\n\
             2,2024-05-01T12:00:00Z,230.5,31,XX,1,10,45,\n\
             3,2024-05-01T12:00:00Z,230.5,31,XX,1,10,45,700\n"
        );
        let cat = parse_detections(csv.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(cat.events.len(), 2);
        assert_eq!(cat.provenance.rejects.len(), 1);
        assert_eq!(cat.provenance.rejects[0].reason, RejectReason::MissingRange);
        assert_eq!(cat.provenance.rejects[0].line, 3);
    }

    #[test]
    fn bad_cells_get_reason_codes() {
        let csv = format!(
            "{HEADER}x,2024-05-01T12:00:00Z,230.5,31,XX,1,10,45,800\n\
             1,yesterday,230.5,31,XX,1,10,45,800\n\
             1,2024-05-01T12:00:00Z,230.5,32,XX,1,10,45,800\n\
             1,2024-05-01T12:00:00Z,230.5,31,RR,1,10,45,800\n\
             1,2024-05-01T12:00:00Z,230.5,31,XX,abc,10,45,800\n"
        );
        let cat = parse_detections(csv.as_bytes(), &ColumnMap::default()).unwrap();
        let reasons: Vec<_> = cat.provenance.rejects.iter().map(|r| r.reason).collect();
        assert_eq!(
            reasons,
            vec![
                RejectReason::BadNoradId,
                RejectReason::BadTimestamp,
                RejectReason::BadChannelIndex,
                RejectReason::BadPolarisation,
                RejectReason::BadNumber
            ]
        );
    }

    #[test]
    fn missing_column_is_fatal() {
        let csv = "norad_id,utc\n1,2024-05-01T12:00:00Z\n";
        match parse_detections(csv.as_bytes(), &ColumnMap::default()) {
            Err(Error::MissingColumn { field, .. }) => assert_eq!(field, "freq_mhz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn column_map_renames() {
        let csv = "sat,time,f,fine,p,s,az,el,r\n1,2024-05-01T12:00:00Z,230.5,31,XX,1,10,45,800\n";
        let map = ColumnMap {
            norad_id: "sat".into(),
            utc: "time".into(),
            freq_mhz: "f".into(),
            fine_channel_index: "fine".into(),
            pol: "p".into(),
            flux_jy: "s".into(),
            azimuth_deg: "az".into(),
            elevation_deg: "el".into(),
            range_km: "r".into(),
        };
        assert_eq!(parse_detections(csv.as_bytes(), &map).unwrap().events.len(), 1);
    }
}
