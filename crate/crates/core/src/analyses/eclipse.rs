use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::channel_seed_label;
use crate::catalogue::{Catalogue, DetectionEvent, Population};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::IlluminationState;
use crate::stats::{
    bootstrap_median_ratio, cluster_bootstrap_ratio, interaction_test, median, quantile_sorted, resample_map,
    InteractionResult, Interval, RatioWithCI, Resampling, SatelliteGroup,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EclipseGroup {
    Pooled,
    Dtc,
    KuOnly,
    MatchedKu,
}

impl EclipseGroup {
    pub const ALL: [EclipseGroup; 4] = [EclipseGroup::Pooled, EclipseGroup::Dtc, EclipseGroup::KuOnly, EclipseGroup::MatchedKu];

    pub fn label(self) -> &'static str {
        match self {
            EclipseGroup::Pooled => "pooled",
            EclipseGroup::Dtc => "dtc",
            EclipseGroup::KuOnly => "ku_only",
            EclipseGroup::MatchedKu => "matched_ku",
        }
    }
}

/// Illuminated/eclipsed range-corrected flux ratio for one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEclipse {
    pub group: EclipseGroup,
    pub n_satellites: usize,
    /// Satellites with at least one detection in each state.
    pub n_sat_illuminated: usize,
    pub n_sat_eclipsed: usize,
    pub n_illuminated: usize,
    pub n_eclipsed: usize,
    pub median_illuminated: Option<f64>,
    pub median_eclipsed: Option<f64>,
    pub detection_level: Option<RatioWithCI>,
    pub satellite_level: Option<RatioWithCI>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSummary {
    pub a: EclipseGroup,
    pub b: EclipseGroup,
    pub result: InteractionResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumKind {
    AltitudeKm,
    LatitudeDeg,
    FrequencyMhz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub group: EclipseGroup,
    pub kind: StratumKind,
    pub lo: f64,
    pub hi: f64,
    pub n_illuminated: usize,
    pub n_eclipsed: usize,
    pub ratio: RatioWithCI,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSatelliteSummary {
    pub group: EclipseGroup,
    pub min_per_state: usize,
    /// (NORAD id, median illuminated / median eclipsed).
    pub ratios: Vec<(u32, f64)>,
    /// Median of the per-satellite ratios, interval from resampling satellites.
    pub median: Interval,
    pub iqr: (f64, f64),
    pub frac_below_1: f64,
    pub frac_below_075: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EclipseReport {
    pub populations: Vec<PopulationEclipse>,
    pub interactions: Vec<InteractionSummary>,
    pub strata: Vec<Stratum>,
    pub per_satellite: Vec<PerSatelliteSummary>,
    /// Mean over time of illuminated-state flux relative to an always-illuminated
    /// satellite, from the DTC state split and ratio.
    pub time_avg_factor: Option<f64>,
    pub notes: Vec<String>,
}

/// frac_illum + frac_ecl / ratio, where ratio is illuminated/eclipsed.
pub fn time_avg_factor(n_illuminated: usize, n_eclipsed: usize, ratio: f64) -> f64 {
    let n = (n_illuminated + n_eclipsed) as f64;
    n_illuminated as f64 / n + n_eclipsed as f64 / n / ratio
}

struct Tagged<'a> {
    event: &'a DetectionEvent,
    illuminated: bool,
    s_norm: f64,
}

fn split<'a, I: IntoIterator<Item = &'a Tagged<'a>>>(events: I) -> (Vec<f64>, Vec<f64>) {
    let (mut ill, mut ecl) = (Vec::new(), Vec::new());
    for t in events {
        if t.illuminated { ill.push(t.s_norm) } else { ecl.push(t.s_norm) }
    }
    (ill, ecl)
}

fn groups_of(events: &[&Tagged]) -> Vec<SatelliteGroup> {
    let mut map: BTreeMap<u32, SatelliteGroup> = BTreeMap::new();
    for t in events {
        let g = map.entry(t.event.norad_id).or_insert_with(|| SatelliteGroup { id: t.event.norad_id, ..Default::default() });
        if t.illuminated { g.illuminated.push(t.s_norm) } else { g.eclipsed.push(t.s_norm) }
    }
    map.into_values().collect()
}

fn population_row(group: EclipseGroup, events: &[&Tagged], res: &Resampling) -> (PopulationEclipse, Vec<SatelliteGroup>) {
    let (ill, ecl) = split(events.iter().copied());
    let groups = groups_of(events);
    let mut notes = Vec::new();
    let mut attempt = |what: &str, r: Result<RatioWithCI>| match r {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("{what} ratio undefined: {e}"));
            None
        }
    };
    let (detection_level, satellite_level) = if ill.is_empty() || ecl.is_empty() {
        notes.push(format!("ratio undefined: {} illuminated, {} eclipsed detections", ill.len(), ecl.len()));
        (None, None)
    } else {
        (
            attempt("detection-level", bootstrap_median_ratio(&ill, &ecl, &res.derived("detection"))),
            attempt("satellite-level", cluster_bootstrap_ratio(&groups, &res.derived("satellite"))),
        )
    };
    let row = PopulationEclipse {
        group,
        n_satellites: groups.len(),
        n_sat_illuminated: groups.iter().filter(|g| !g.illuminated.is_empty()).count(),
        n_sat_eclipsed: groups.iter().filter(|g| !g.eclipsed.is_empty()).count(),
        n_illuminated: ill.len(),
        n_eclipsed: ecl.len(),
        median_illuminated: median(&ill),
        median_eclipsed: median(&ecl),
        detection_level,
        satellite_level,
        notes,
    };
    (row, groups)
}

fn stratum(group: EclipseGroup, kind: StratumKind, lo: f64, hi: f64, events: &[&Tagged], min: usize, res: &Resampling) -> Option<Stratum> {
    let (ill, ecl) = split(events.iter().copied());
    if ill.len() < min || ecl.len() < min {
        return None;
    }
    let label = format!("{}/{kind:?}/{lo:.5}", group.label());
    let ratio = bootstrap_median_ratio(&ill, &ecl, &res.derived(&label)).ok()?;
    Some(Stratum { group, kind, lo, hi, n_illuminated: ill.len(), n_eclipsed: ecl.len(), ratio })
}

fn strata_for(group: EclipseGroup, events: &[&Tagged], cfg: &RunConfig, res: &Resampling) -> Vec<Stratum> {
    let ec = &cfg.analysis.eclipse;
    let mut out = Vec::new();

    let mut alt: BTreeMap<i64, Vec<&Tagged>> = BTreeMap::new();
    for &t in events {
        let h_km = t.event.illumination.unwrap().subsat.height_m / 1e3;
        alt.entry(((h_km - ec.altitude_start_km) / ec.altitude_bin_km).floor() as i64).or_default().push(t);
    }
    for (k, v) in alt {
        let lo = ec.altitude_start_km + k as f64 * ec.altitude_bin_km;
        out.extend(stratum(group, StratumKind::AltitudeKm, lo, lo + ec.altitude_bin_km, &v, ec.min_per_state_stratum, res));
    }

    let lats: Vec<f64> = events.iter().map(|t| t.event.illumination.unwrap().subsat.lat_deg).collect();
    let (lat_lo, lat_hi) = lats.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let nb = ec.n_latitude_bins;
    if nb > 0 && lat_hi > lat_lo {
        let w = (lat_hi - lat_lo) / nb as f64;
        let mut bins: Vec<Vec<&Tagged>> = vec![Vec::new(); nb];
        for (&t, lat) in events.iter().zip(&lats) {
            bins[(((lat - lat_lo) / w) as usize).min(nb - 1)].push(t);
        }
        for (i, v) in bins.iter().enumerate() {
            let lo = lat_lo + i as f64 * w;
            out.extend(stratum(group, StratumKind::LatitudeDeg, lo, lo + w, v, ec.min_per_state_stratum, res));
        }
    }

    let mut channels: Vec<(f64, Vec<&Tagged>)> = Vec::new();
    for &t in events {
        match channels.iter_mut().find(|c| t.event.on_channel(c.0)) {
            Some(c) => c.1.push(t),
            None => channels.push((t.event.freq_mhz, vec![t])),
        }
    }
    channels.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (f, v) in channels {
        let res = res.derived(&channel_seed_label("frequency", f));
        out.extend(stratum(group, StratumKind::FrequencyMhz, f, f, &v, ec.min_per_state_frequency, &res));
    }
    out
}

fn per_satellite(group: EclipseGroup, groups: &[SatelliteGroup], min: usize, res: &Resampling) -> Option<PerSatelliteSummary> {
    let ratios: Vec<(u32, f64)> = groups
        .iter()
        .filter(|g| g.illuminated.len() >= min && g.eclipsed.len() >= min)
        .filter_map(|g| {
            let me = median(&g.eclipsed)?;
            (me != 0.0).then(|| (g.id, median(&g.illuminated).unwrap() / me))
        })
        .collect();
    if ratios.is_empty() {
        return None;
    }
    let r: Vec<f64> = ratios.iter().map(|x| x.1).collect();
    let mut sorted = r.clone();
    sorted.sort_by(f64::total_cmp);
    let n = r.len();
    let mut boot: Vec<f64> = resample_map(res, "per_satellite_median", |rng| {
        use rand::Rng;
        let mut draw: Vec<f64> = (0..n).map(|_| r[rng.random_range(0..n)]).collect();
        crate::stats::median_in_place(&mut draw).unwrap()
    });
    boot.sort_by(f64::total_cmp);
    let count_below = |t: f64| r.iter().filter(|&&x| x < t).count() as f64 / n as f64;
    Some(PerSatelliteSummary {
        group,
        min_per_state: min,
        median: Interval {
            estimate: quantile_sorted(&sorted, 0.5).unwrap(),
            ci_low: quantile_sorted(&boot, 0.025).unwrap(),
            ci_high: quantile_sorted(&boot, 0.975).unwrap(),
        },
        iqr: (quantile_sorted(&sorted, 0.25).unwrap(), quantile_sorted(&sorted, 0.75).unwrap()),
        frac_below_1: count_below(1.0),
        frac_below_075: count_below(0.75),
        ratios,
    })
}

/// Illuminated versus eclipsed flux by population, with the DTC/Ku-only
/// interaction, descriptive strata and per-satellite ratios.
pub fn eclipse_analysis(cat: &Catalogue, cfg: &RunConfig) -> Result<EclipseReport> {
    let ec = &cfg.analysis.eclipse;
    let r_ref = cfg.range.reference_km;
    let mut tagged = Vec::new();
    let mut untagged = 0usize;
    for e in cat.analysed_stacked(None) {
        match e.state() {
            Some(s) => tagged.push(Tagged { event: e, illuminated: s == IlluminationState::Illuminated, s_norm: e.s_norm(r_ref) }),
            None => untagged += 1,
        }
    }
    if untagged > 0 {
        return Err(Error::InvalidInput(format!(
            "{untagged} analysed detections lack an illumination tag; run tagging first"
        )));
    }
    if tagged.is_empty() {
        return Err(Error::EmptySample("no analysed detections".into()));
    }

    let res = cfg.resampling("eclipse");
    let in_window = |id: u32| {
        cat.satellites
            .get(&id)
            .and_then(|s| s.launch_date)
            .is_some_and(|d| d >= ec.matched_launch_start && d <= ec.matched_launch_end)
    };
    let member = |g: EclipseGroup, t: &Tagged| {
        let p = cat.population_of(t.event.norad_id);
        match g {
            EclipseGroup::Pooled => true,
            EclipseGroup::Dtc => p == Population::Dtc,
            EclipseGroup::KuOnly => p == Population::KuOnly,
            EclipseGroup::MatchedKu => p == Population::KuOnly && in_window(t.event.norad_id),
        }
    };

    let mut populations = Vec::new();
    let mut groups: BTreeMap<EclipseGroup, Vec<SatelliteGroup>> = BTreeMap::new();
    let mut members: BTreeMap<EclipseGroup, Vec<&Tagged>> = BTreeMap::new();
    for g in EclipseGroup::ALL {
        let ev: Vec<&Tagged> = tagged.iter().filter(|t| member(g, t)).collect();
        let (row, sg) = population_row(g, &ev, &res.derived(g.label()));
        populations.push(row);
        groups.insert(g, sg);
        members.insert(g, ev);
    }

    let mut notes = Vec::new();
    let mut interactions = Vec::new();
    for b in [EclipseGroup::KuOnly, EclipseGroup::MatchedKu] {
        let label = format!("interaction/{}", b.label());
        match interaction_test(&groups[&EclipseGroup::Dtc], &groups[&b], &res.derived(&label)) {
            Ok(result) => interactions.push(InteractionSummary { a: EclipseGroup::Dtc, b, result }),
            Err(e) => notes.push(format!("dtc vs {}: interaction undefined: {e}", b.label())),
        }
    }

    let mut strata = Vec::new();
    let mut per_sat = Vec::new();
    for g in [EclipseGroup::Dtc, EclipseGroup::KuOnly] {
        strata.extend(strata_for(g, &members[&g], cfg, &res.derived(&format!("strata/{}", g.label()))));
        per_sat.extend(per_satellite(
            g,
            &groups[&g],
            ec.min_per_state_satellite,
            &res.derived(&format!("per_satellite/{}", g.label())),
        ));
    }

    let dtc = &populations[1];
    let time_avg = dtc
        .detection_level
        .as_ref()
        .map(|r| time_avg_factor(dtc.n_illuminated, dtc.n_eclipsed, r.estimate));

    Ok(EclipseReport {
        populations,
        interactions,
        strata,
        per_satellite: per_sat,
        time_avg_factor: time_avg,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_average_reference() {
        let f = time_avg_factor(7686, 2494, 0.465);
        assert!((f - 1.2818).abs() < 5e-4, "{f}");
        assert!((time_avg_factor(3, 11, 1.0) - 1.0).abs() < 1e-15);
    }
}
