use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Catalogue, Population, SatelliteRecord, SourceDigest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusEntry {
    pub bus_label: String,
    pub launch_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusTable {
    pub entries: BTreeMap<u32, BusEntry>,
    /// Rows whose NORAD id had already been seen (last one wins).
    pub duplicates: usize,
    /// Rows without a usable NORAD id.
    pub skipped: usize,
    pub source: SourceDigest,
}

const NORAD_KEYS: &[&str] = &["norad_id", "norad", "satcat"];
const BUS_KEYS: &[&str] = &["bus", "bus_label"];
const DATE_KEYS: &[&str] = &["launch_date", "ldate"];

fn find(headers: &[String], keys: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| keys.iter().any(|k| h.eq_ignore_ascii_case(k)))
}

/// Accepts ISO dates and catalogue-style "2024 Jan 3" (trailing time ignored).
fn parse_launch_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim().trim_end_matches('?');
    if let Ok(d) = NaiveDate::parse_from_str(s.get(..10).unwrap_or(s), "%Y-%m-%d") {
        return Some(d);
    }
    let head: Vec<&str> = s.split_whitespace().take(3).collect();
    NaiveDate::parse_from_str(&head.join(" "), "%Y %b %d").ok()
}

/// Parses a tab- or comma-separated bus table with NORAD id, bus label and
/// launch date columns. The first non-empty line is the header (a leading
/// `#` is stripped); later `#` lines are comments.
pub fn parse_bus_table<R: Read>(mut source: R) -> Result<BusTable> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::EmptyBusTable)?;
    let delim = if header.contains('\t') { '\t' } else { ',' };
    let headers: Vec<String> = header
        .trim_start_matches('#')
        .split(delim)
        .map(|h| h.trim().to_string())
        .collect();

    let missing = |what: &str| Error::MissingColumn {
        field: what.to_string(),
        header: headers.join(","),
    };
    let i_norad = find(&headers, NORAD_KEYS).ok_or_else(|| missing("norad_id"))?;
    let i_bus = find(&headers, BUS_KEYS).ok_or_else(|| missing("bus"))?;
    let i_date = find(&headers, DATE_KEYS);

    let mut entries = BTreeMap::new();
    let (mut duplicates, mut skipped) = (0, 0);
    for line in lines.filter(|l| !l.starts_with('#')) {
        let cells: Vec<&str> = line.split(delim).map(str::trim).collect();
        let Some(norad) = cells.get(i_norad).and_then(|c| c.parse::<u32>().ok()) else {
            skipped += 1;
            continue;
        };
        let entry = BusEntry {
            bus_label: cells.get(i_bus).copied().unwrap_or("").to_string(),
            launch_date: i_date.and_then(|i| cells.get(i)).and_then(|c| parse_launch_date(c)),
        };
        if entries.insert(norad, entry).is_some() {
            duplicates += 1;
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyBusTable);
    }
    if duplicates > 0 {
        log::warn!("bus table: {duplicates} duplicate NORAD ids, last row kept");
    }
    Ok(BusTable {
        entries,
        duplicates,
        skipped,
        source: SourceDigest::of("bus_table", &bytes),
    })
}

/// Builds one satellite record per NORAD id seen in the events. Ids missing
/// from the bus table are Unclassified. Rebuilds from scratch, so repeated
/// calls give the same result.
pub fn classify(mut catalogue: Catalogue, bus: &BusTable) -> Catalogue {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for e in &catalogue.events {
        let c = counts.entry(e.norad_id).or_default();
        if e.is_stacked() {
            *c += 1;
        }
    }
    catalogue.satellites = counts
        .into_iter()
        .map(|(id, n)| {
            let entry = bus.entries.get(&id);
            let rec = SatelliteRecord {
                norad_id: id,
                bus_label: entry.map(|b| b.bus_label.clone()),
                population: entry.map_or(Population::Unclassified, |b| Population::from_bus(&b.bus_label)),
                launch_date: entry.and_then(|b| b.launch_date),
                n_detections: n,
            };
            (id, rec)
        })
        .collect();
    let prov = &mut catalogue.provenance;
    prov.sources.retain(|s| s.label != bus.source.label);
    prov.sources.push(bus.source.clone());
    prov.bus_duplicates = bus.duplicates;
    catalogue
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let t = parse_bus_table("norad_id,bus,launch_date\n60041,V2MD,2024-06-08\n".as_bytes()).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[&60041].bus_label, "V2MD");
        assert_eq!(t.entries[&60041].launch_date, NaiveDate::from_ymd_opt(2024, 6, 8));
    }

    #[test]
    fn labels_kept_verbatim() {
        let src = "norad_id\tbus\tlaunch_date\n1\tV2MD\t2024-01-03\n2\tV2M\t2023-02-27\n3\tV1.0\t2019-11-11\n4\tV1.5\t2021-09-14\n";
        let t = parse_bus_table(src.as_bytes()).unwrap();
        let labels: Vec<&str> = t.entries.values().map(|e| e.bus_label.as_str()).collect();
        assert_eq!(labels, vec!["V2MD", "V2M", "V1.0", "V1.5"]);
    }

    #[test]
    fn catalogue_style_header_and_dates() {
        let src = "#JCAT\tSatcat\tLDate\tBus\n# Updated\nS1\t60041 \t2024 Jun  8 0150\tV2MD\nS2\t\t2024 Jun  8\tV2M\n";
        let t = parse_bus_table(src.as_bytes()).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.skipped, 1);
        assert_eq!(t.entries[&60041].launch_date, NaiveDate::from_ymd_opt(2024, 6, 8));
    }

    #[test]
    fn duplicates_last_wins() {
        let t = parse_bus_table("norad,bus\n5,V2M\n5,V2MD\n".as_bytes()).unwrap();
        assert_eq!(t.duplicates, 1);
        assert_eq!(t.entries[&5].bus_label, "V2MD");
    }

    #[test]
    fn empty_is_fatal() {
        assert!(matches!(parse_bus_table("".as_bytes()), Err(Error::EmptyBusTable)));
        assert!(matches!(parse_bus_table("norad,bus\n".as_bytes()), Err(Error::EmptyBusTable)));
    }
}
