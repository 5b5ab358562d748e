//! Synthetic catalogues with known ground truth, and the brute-force
//! oracles used to validate the statistics and geometry.
//!
//! A generated catalogue is built satellite by satellite. Each satellite
//! gets a handful of passes over the observatory; a pass is a run of
//! detections at a fixed cadence along a simple rise–culminate–set track in
//! one coarse channel. Detections are tagged with the production geometry
//! and the population's eclipse multiplier is applied afterwards, so the
//! recovered eclipse ratio depends on the geometry actually working.

mod oracle;

pub use oracle::{oracle_cliffs_delta, oracle_eclipsed, oracle_mwu_exact, oracle_sun, ORACLE_MWU_MAX_N};

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalogue::{
    classify, BusEntry, BusTable, Catalogue, DetectionEvent, Polarisation, Population, Provenance, SourceDigest,
    STACKED_INDEX,
};
use crate::error::{Error, Result};
use crate::geometry::{tag_event, IlluminationState, ObservatorySite, ShadowModel};
use crate::stats::{median_in_place, stream_rng};

/// Coarse-channel centres of the analysed band (MHz).
pub const DEFAULT_CHANNELS_MHZ: [f64; 21] = [
    73.4375, 74.21875, 100.0, 110.15625, 120.3125, 130.46875, 135.9375, 136.71875, 138.28125, 139.0625, 140.625,
    150.78125, 153.125, 161.71875, 170.3125, 180.46875, 190.625, 200.0, 225.78125, 230.46875, 234.375,
];

/// Log-normal flux law for range-corrected flux density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxLaw {
    pub median_jy: f64,
    pub sigma_ln: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSpec {
    pub bus_label: String,
    pub n_satellites: usize,
    pub passes_min: usize,
    pub passes_max: usize,
    pub detections_per_pass_min: usize,
    pub detections_per_pass_max: usize,
    pub flux: FluxLaw,
    /// Log-normal scatter of per-satellite brightness about the law.
    pub satellite_sigma_ln: f64,
    /// Flux factor applied to eclipsed detections.
    pub eclipse_multiplier: f64,
    pub launch_start: NaiveDate,
    pub launch_end: NaiveDate,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            bus_label: "V2M".into(),
            n_satellites: 40,
            passes_min: 2,
            passes_max: 5,
            detections_per_pass_min: 4,
            detections_per_pass_max: 16,
            flux: FluxLaw {
                median_jy: 50.0,
                sigma_ln: 0.8,
            },
            satellite_sigma_ln: 0.2,
            eclipse_multiplier: 1.0,
            launch_start: NaiveDate::from_ymd_opt(2023, 6, 1).unwrap(),
            launch_end: NaiveDate::from_ymd_opt(2024, 6, 1).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBias {
    pub freq_mhz: f64,
    pub xx_probability: f64,
}

/// Narrowband excess in selected fine bins of one coarse channel, carried
/// by a random subset of satellites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injector {
    pub freq_mhz: f64,
    pub index: u8,
    /// Fractional flux excess in the affected bins.
    pub amplitude: f64,
    /// Fraction of satellites carrying the excess.
    pub duty_fraction: f64,
    /// Number of bins affected, centred on `index`.
    #[serde(default = "one")]
    pub width_bins: u8,
}

fn one() -> u8 {
    1
}

/// Fixed fractional response at one fine index in every channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandpassArtefact {
    pub index: u8,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub start_utc: DateTime<Utc>,
    pub span_days: f64,
    pub cadence_s: f64,
    pub altitude_min_km: f64,
    pub altitude_max_km: f64,
    pub reference_range_km: f64,
    pub channels_mhz: Vec<f64>,
    pub populations: Vec<PopulationSpec>,
    pub xx_probability: f64,
    pub channel_bias: Vec<ChannelBias>,
    /// Channels that also get the 31 fine rows per detection. `None` means
    /// every channel.
    pub fine_channels_mhz: Option<Vec<f64>>,
    /// Log-normal scatter of a fine bin about its detection's flux.
    pub fine_sigma_ln: f64,
    pub injector: Option<Injector>,
    pub bandpass: Option<BandpassArtefact>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 1,
            start_utc: DateTime::from_timestamp(1_709_251_200, 0).unwrap(), // 2024-03-01
            span_days: 120.0,
            cadence_s: 2.0,
            altitude_min_km: 300.0,
            altitude_max_km: 412.0,
            reference_range_km: 1000.0,
            channels_mhz: DEFAULT_CHANNELS_MHZ.to_vec(),
            populations: vec![
                PopulationSpec {
                    bus_label: "V2MD".into(),
                    launch_start: NaiveDate::from_ymd_opt(2024, 1, 3).unwrap(),
                    launch_end: NaiveDate::from_ymd_opt(2024, 10, 18).unwrap(),
                    ..PopulationSpec::default()
                },
                PopulationSpec::default(),
            ],
            xx_probability: 0.5,
            channel_bias: Vec::new(),
            fine_channels_mhz: Some(vec![230.46875]),
            fine_sigma_ln: 0.3,
            injector: None,
            bandpass: None,
        }
    }
}

impl SynthSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.channels_mhz.is_empty() {
            return bad("synth: channel list is empty".into());
        }
        if !(self.cadence_s > 0.0 && self.span_days > 0.0) {
            return bad("synth: cadence and span must be positive".into());
        }
        if !(self.altitude_min_km > 0.0 && self.altitude_min_km <= self.altitude_max_km) {
            return bad("synth: altitude range invalid".into());
        }
        for p in &self.populations {
            if p.passes_min > p.passes_max || p.detections_per_pass_min > p.detections_per_pass_max {
                return bad(format!("synth: {} has min > max", p.bus_label));
            }
            if p.detections_per_pass_min == 0 {
                return bad(format!("synth: {} needs at least one detection per pass", p.bus_label));
            }
            if !(p.flux.median_jy > 0.0 && p.flux.sigma_ln >= 0.0 && p.eclipse_multiplier > 0.0) {
                return bad(format!("synth: {} flux law invalid", p.bus_label));
            }
            if p.launch_start > p.launch_end {
                return bad(format!("synth: {} launch window reversed", p.bus_label));
            }
        }
        let probs = std::iter::once(self.xx_probability).chain(self.channel_bias.iter().map(|b| b.xx_probability));
        if probs.into_iter().any(|p| !(0.0..=1.0).contains(&p)) {
            return bad("synth: XX probabilities must lie in [0, 1]".into());
        }
        if let Some(inj) = &self.injector {
            if !(0.0..=1.0).contains(&inj.duty_fraction) || inj.index > 30 || inj.width_bins == 0 {
                return bad("synth: injector invalid".into());
            }
        }
        if let Some(b) = &self.bandpass {
            if b.index > 30 {
                return bad("synth: bandpass index must be a fine bin".into());
            }
        }
        Ok(())
    }

    fn xx_probability_at(&self, freq: f64) -> f64 {
        self.channel_bias
            .iter()
            .find(|b| crate::catalogue::same_channel(b.freq_mhz, freq))
            .map_or(self.xx_probability, |b| b.xx_probability)
    }

    fn has_fine_rows(&self, freq: f64) -> bool {
        self.fine_channels_mhz
            .as_ref()
            .is_none_or(|v| v.iter().any(|&f| crate::catalogue::same_channel(f, freq)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTruth {
    pub bus_label: String,
    pub population: Population,
    pub n_satellites: usize,
    pub n_stacked: usize,
    pub n_illuminated: usize,
    pub n_eclipsed: usize,
    pub flux_median_jy: f64,
    pub eclipse_multiplier: f64,
    /// Illuminated/eclipsed ratio implied by the multiplier.
    pub eclipse_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectorTruth {
    pub freq_mhz: f64,
    pub bins: Vec<u8>,
    pub amplitude: f64,
    pub active_satellites: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_events: usize,
    pub populations: Vec<PopulationTruth>,
    /// DTC/Ku-only ratio of the flux-law medians, when both are present.
    pub dtc_ku_ratio: Option<f64>,
    /// Realised per-satellite median of range-corrected stacked flux.
    pub per_satellite_median_jy: BTreeMap<u32, f64>,
    /// Expected target-to-background fine-bin ratio per satellite.
    pub per_satellite_ratio: BTreeMap<u32, f64>,
    pub injector: Option<InjectorTruth>,
    pub bandpass: Option<BandpassArtefact>,
    pub channel_xx_probability: Vec<ChannelBias>,
}

pub struct Synthetic {
    pub catalogue: Catalogue,
    pub bus_table: BusTable,
    pub truth: GroundTruth,
}

const EARTH_MEAN_RADIUS_KM: f64 = 6371.0;
const MIN_ELEVATION_DEG: f64 = 10.0;

fn slant_range_km(elevation_deg: f64, altitude_km: f64) -> f64 {
    let r = EARTH_MEAN_RADIUS_KM;
    let s = elevation_deg.to_radians().sin();
    ((r + altitude_km).powi(2) - (r * elevation_deg.to_radians().cos()).powi(2)).sqrt() - r * s
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct SatPlan<'a> {
    norad: u32,
    spec: &'a PopulationSpec,
    active: bool,
}

struct SatOutput {
    events: Vec<DetectionEvent>,
    stacked_s_norm: Vec<f64>,
    lit: usize,
    dark: usize,
}

fn generate_satellite(
    spec: &SynthSpec,
    plan: &SatPlan,
    site: &ObservatorySite,
    model: &ShadowModel,
    index: u64,
) -> Result<SatOutput> {
    let mut rng = stream_rng(spec.seed, "synth/satellite", index);
    let pop = plan.spec;
    let sat_scale = (pop.satellite_sigma_ln * normal(&mut rng)).exp();
    let altitude = rng.random_range(spec.altitude_min_km..=spec.altitude_max_km);
    let n_passes = rng.random_range(pop.passes_min..=pop.passes_max);
    let span_s = spec.span_days * 86_400.0;

    let mut out = SatOutput {
        events: Vec::new(),
        stacked_s_norm: Vec::new(),
        lit: 0,
        dark: 0,
    };
    for _ in 0..n_passes {
        let start = spec.start_utc + Duration::milliseconds((rng.random::<f64>() * span_s * 1e3) as i64);
        let freq = spec.channels_mhz[rng.random_range(0..spec.channels_mhz.len())];
        let n_det = rng.random_range(pop.detections_per_pass_min..=pop.detections_per_pass_max);
        let az_rise = rng.random_range(0.0..360.0);
        let el_max = rng.random_range(25.0..90.0);
        let p_xx = spec.xx_probability_at(freq);
        let fine = spec.has_fine_rows(freq);

        for k in 0..n_det {
            // fraction through the visible arc
            let u = (k as f64 + 0.5) / n_det as f64;
            let elevation_deg = MIN_ELEVATION_DEG + (el_max - MIN_ELEVATION_DEG) * (std::f64::consts::PI * u).sin();
            let azimuth_deg = (az_rise + 180.0 * u).rem_euclid(360.0);
            let range_km = slant_range_km(elevation_deg, altitude);
            let epoch_utc = start + Duration::milliseconds((k as f64 * spec.cadence_s * 1e3) as i64);
            let pol_feed = if rng.random::<f64>() < p_xx { Polarisation::XX } else { Polarisation::YY };

            let mut ev = DetectionEvent {
                norad_id: plan.norad,
                epoch_utc,
                freq_mhz: freq,
                fine_channel_index: STACKED_INDEX,
                pol_feed,
                flux_jy: 0.0,
                azimuth_deg,
                elevation_deg,
                range_km,
                illumination: None,
            };
            let tag = tag_event(&ev, site, model)?;
            let eclipsed = tag.state == IlluminationState::Eclipsed;
            if eclipsed {
                out.dark += 1;
            } else {
                out.lit += 1;
            }
            let mut s_norm = pop.flux.median_jy * sat_scale * (pop.flux.sigma_ln * normal(&mut rng)).exp();
            if eclipsed {
                s_norm *= pop.eclipse_multiplier;
            }
            let to_obs = (spec.reference_range_km / range_km).powi(2);
            ev.flux_jy = s_norm * to_obs;
            ev.illumination = Some(tag);
            out.stacked_s_norm.push(s_norm);

            if fine {
                let sig = spec.fine_sigma_ln;
                for b in 0..STACKED_INDEX {
                    let mut f = ev.flux_jy * (sig * normal(&mut rng) - 0.5 * sig * sig).exp();
                    if let Some(bp) = &spec.bandpass {
                        if bp.index == b {
                            f *= 1.0 + bp.amplitude;
                        }
                    }
                    if let Some(inj) = &spec.injector {
                        if plan.active && crate::catalogue::same_channel(inj.freq_mhz, freq) && injector_bins(inj).contains(&b) {
                            f *= 1.0 + inj.amplitude;
                        }
                    }
                    out.events.push(DetectionEvent {
                        fine_channel_index: b,
                        flux_jy: f,
                        ..ev.clone()
                    });
                }
            }
            out.events.push(ev);
        }
    }
    Ok(out)
}

fn injector_bins(inj: &Injector) -> Vec<u8> {
    let half = (inj.width_bins as i32 - 1) / 2;
    let lo = inj.index as i32 - half;
    (lo..lo + inj.width_bins as i32)
        .filter(|b| (0..31).contains(b))
        .map(|b| b as u8)
        .collect()
}

fn random_date(rng: &mut ChaCha8Rng, start: NaiveDate, end: NaiveDate) -> NaiveDate {
    let days = (end - start).num_days();
    start + Duration::days(rng.random_range(0..=days))
}

/// Generates a classified, tagged catalogue with its ground truth.
/// Deterministic under `spec.seed`; satellites are generated in parallel on
/// independent streams.
pub fn generate(spec: &SynthSpec, site: &ObservatorySite, model: &ShadowModel) -> Result<Synthetic> {
    spec.validate()?;
    let mut plan_rng = stream_rng(spec.seed, "synth/plan", 0);
    let mut plans = Vec::new();
    let mut entries = BTreeMap::new();
    let mut norad = 50_000u32;
    for pop in &spec.populations {
        for _ in 0..pop.n_satellites {
            norad += 1;
            let active = spec
                .injector
                .as_ref()
                .is_some_and(|inj| plan_rng.random::<f64>() < inj.duty_fraction);
            entries.insert(
                norad,
                BusEntry {
                    bus_label: pop.bus_label.clone(),
                    launch_date: Some(random_date(&mut plan_rng, pop.launch_start, pop.launch_end)),
                },
            );
            plans.push(SatPlan { norad, spec: pop, active });
        }
    }

    let outputs = plans
        .par_iter()
        .enumerate()
        .map(|(i, p)| generate_satellite(spec, p, site, model, i as u64))
        .collect::<Result<Vec<_>>>()?;

    let mut events = Vec::new();
    let mut per_sat_median = BTreeMap::new();
    let mut per_sat_ratio = BTreeMap::new();
    let mut pop_truth: Vec<PopulationTruth> = spec
        .populations
        .iter()
        .map(|p| PopulationTruth {
            bus_label: p.bus_label.clone(),
            population: Population::from_bus(&p.bus_label),
            n_satellites: p.n_satellites,
            n_stacked: 0,
            n_illuminated: 0,
            n_eclipsed: 0,
            flux_median_jy: p.flux.median_jy,
            eclipse_multiplier: p.eclipse_multiplier,
            eclipse_ratio: 1.0 / p.eclipse_multiplier,
        })
        .collect();

    let mut pop_idx = 0;
    let mut left_in_pop = spec.populations.first().map_or(0, |p| p.n_satellites);
    for (plan, mut out) in plans.iter().zip(outputs) {
        while left_in_pop == 0 {
            pop_idx += 1;
            left_in_pop = spec.populations[pop_idx].n_satellites;
        }
        left_in_pop -= 1;
        let t = &mut pop_truth[pop_idx];
        t.n_stacked += out.stacked_s_norm.len();
        t.n_illuminated += out.lit;
        t.n_eclipsed += out.dark;
        if let Some(m) = median_in_place(&mut out.stacked_s_norm) {
            per_sat_median.insert(plan.norad, m);
        }
        let bp = spec.bandpass.as_ref();
        let inj_gain = if plan.active { spec.injector.as_ref().map_or(0.0, |i| i.amplitude) } else { 0.0 };
        let target = spec.injector.as_ref().map(|i| i.index);
        if let Some(ti) = target {
            let bp_gain = bp.filter(|b| b.index == ti).map_or(0.0, |b| b.amplitude);
            per_sat_ratio.insert(plan.norad, (1.0 + inj_gain) * (1.0 + bp_gain));
        }
        events.append(&mut out.events);
    }

    let bus_bytes: Vec<u8> = entries
        .iter()
        .flat_map(|(id, e)| format!("{id},{}\n", e.bus_label).into_bytes())
        .collect();
    let bus_table = BusTable {
        entries,
        duplicates: 0,
        skipped: 0,
        source: SourceDigest::of("bus_table", &bus_bytes),
    };
    let n_events = events.len();
    let catalogue = classify(
        Catalogue {
            events,
            satellites: BTreeMap::new(),
            provenance: Provenance::default(),
        },
        &bus_table,
    );

    let find = |p: Population| {
        spec.populations
            .iter()
            .find(|s| Population::from_bus(&s.bus_label) == p)
            .map(|s| s.flux.median_jy)
    };
    let dtc_ku_ratio = find(Population::Dtc).zip(find(Population::KuOnly)).map(|(d, k)| d / k);
    let injector = spec.injector.as_ref().map(|inj| InjectorTruth {
        freq_mhz: inj.freq_mhz,
        bins: injector_bins(inj),
        amplitude: inj.amplitude,
        active_satellites: plans.iter().filter(|p| p.active).map(|p| p.norad).collect(),
    });
    let channel_xx_probability = spec
        .channels_mhz
        .iter()
        .map(|&f| ChannelBias {
            freq_mhz: f,
            xx_probability: spec.xx_probability_at(f),
        })
        .collect();

    Ok(Synthetic {
        catalogue,
        bus_table,
        truth: GroundTruth {
            seed: spec.seed,
            n_events,
            populations: pop_truth,
            dtc_ku_ratio,
            per_satellite_median_jy: per_sat_median,
            per_satellite_ratio: per_sat_ratio,
            injector,
            bandpass: spec.bandpass.clone(),
            channel_xx_probability,
        },
    })
}
