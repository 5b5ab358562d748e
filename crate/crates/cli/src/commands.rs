use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};
use uemr::analyses::*;
use uemr::catalogue::{
    apply_quality_cuts, classify, parse_bus_table, parse_detections, read_canonical, write_canonical, Catalogue,
    CutTally, Polarisation, Population, SourceDigest,
};
use uemr::config::BaselineMode;
use uemr::geometry::{illuminated_fraction, tag_catalogue};
use uemr::synth::{generate, SynthSpec};

use crate::envelope::{catalogue_dir, write_envelope, write_json};
use crate::{tables, CliError, CliResult, Ctx, Which};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationRow {
    pub population: Population,
    pub label: String,
    pub bus_labels: Vec<String>,
    /// Satellites with at least one stacked detection.
    pub n_satellites: usize,
    pub n_detections: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationsReport {
    pub rows: Vec<PopulationRow>,
    /// Classified populations (DTC, Ku-only, v1.x), excluding unclassified.
    pub total_satellites: usize,
    pub total_detections: usize,
    pub rejected_rows: usize,
    pub bus_duplicates: usize,
    pub cuts: Option<CutTally>,
}

fn populations(classified: &Catalogue, cut: &Catalogue) -> PopulationsReport {
    let rows: Vec<PopulationRow> = Population::ALL
        .iter()
        .map(|&p| {
            let sats: Vec<_> = classified
                .satellites
                .values()
                .filter(|s| s.population == p && s.n_detections > 0)
                .collect();
            let labels: BTreeSet<String> = sats.iter().filter_map(|s| s.bus_label.clone()).collect();
            PopulationRow {
                population: p,
                label: p.label().to_string(),
                bus_labels: labels.into_iter().collect(),
                n_satellites: sats.len(),
                n_detections: sats.iter().map(|s| s.n_detections).sum(),
            }
        })
        .collect();
    let classified_rows = rows.iter().filter(|r| r.population != Population::Unclassified);
    PopulationsReport {
        total_satellites: classified_rows.clone().map(|r| r.n_satellites).sum(),
        total_detections: classified_rows.map(|r| r.n_detections).sum(),
        rows,
        rejected_rows: classified.provenance.rejects.len(),
        bus_duplicates: classified.provenance.bus_duplicates,
        cuts: cut.provenance.cuts.clone(),
    }
}

fn summary_line(p: &PopulationsReport) -> String {
    let parts: Vec<String> = p
        .rows
        .iter()
        .map(|r| format!("{} {} sats / {} det", r.label, r.n_satellites, r.n_detections))
        .collect();
    format!("{}; {} rows rejected", parts.join(", "), p.rejected_rows)
}

fn persist(ctx: &Ctx, classified: &Catalogue) -> CliResult<PopulationsReport> {
    let cut = apply_quality_cuts(classified.clone());
    let report = populations(classified, &cut);
    write_canonical(&cut, &catalogue_dir(&ctx.out)).map_err(CliError::input)?;
    write_envelope(ctx, "populations", &cut.provenance.sources, &report)?;
    tables::populations(&ctx.out, &report)?;
    Ok(report)
}

pub fn ingest(ctx: &Ctx, detections: Option<PathBuf>, bus_table: Option<PathBuf>) -> CliResult<()> {
    let det = detections
        .or_else(|| ctx.cfg.paths.detections.clone())
        .ok_or_else(|| CliError::input("no detection catalogue given (--detections or paths.detections)"))?;
    let bus = bus_table
        .or_else(|| ctx.cfg.paths.bus_table.clone())
        .ok_or_else(|| CliError::input("no bus table given (--bus-table or paths.bus_table)"))?;
    // both inputs are checked before anything is written
    for p in [&det, &bus] {
        if !p.is_file() {
            return Err(CliError::input(format!("{}: not found", p.display())));
        }
    }
    let open = |p: &Path| File::open(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())));
    let raw = parse_detections(open(&det)?, &ctx.cfg.columns).map_err(CliError::input)?;
    let table = parse_bus_table(open(&bus)?).map_err(CliError::input)?;
    let classified = classify(raw, &table);
    let report = persist(ctx, &classified)?;
    println!("ingested {}: {}", det.display(), summary_line(&report));
    Ok(())
}

fn load(ctx: &Ctx) -> CliResult<Catalogue> {
    let dir = catalogue_dir(&ctx.out);
    read_canonical(&dir).map_err(|e| {
        CliError::input(format!("no canonical catalogue in {} ({e}); run ingest or synth first", dir.display()))
    })
}

fn tagged(ctx: &Ctx, cat: Catalogue) -> CliResult<Catalogue> {
    let site = ctx.cfg.observatory().map_err(CliError::input)?;
    tag_catalogue(cat, &site, &ctx.cfg.shadow_model()).map_err(CliError::input)
}

pub fn tag(ctx: &Ctx) -> CliResult<()> {
    let cat = tagged(ctx, load(ctx)?)?;
    write_canonical(&cat, &catalogue_dir(&ctx.out)).map_err(CliError::input)?;
    for (p, f) in illuminated_fraction(&cat) {
        println!("{}: {:.1}% illuminated", p.label(), 100.0 * f);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarisationPair {
    pub pooled: PolarisationReport,
    pub leave_one_out: PolarisationReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct T1Pair {
    pub clock: T1Report,
    pub crystal: T1Report,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalResult {
    pub emissivity: f64,
    pub temperature_k: f64,
    pub area_m2: f64,
    pub wavelength_m: f64,
    pub range_m: f64,
    pub flux_jy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicEntry {
    pub norad_id: u32,
    pub spectrum: Option<DynamicSpectrum>,
    pub error: Option<String>,
}

const ALL: [Which; 9] = [
    Which::Excess,
    Which::Polarisation,
    Which::Fine,
    Which::Control,
    Which::T1,
    Which::T2,
    Which::T3,
    Which::Eclipse,
    Which::Thermal,
];

pub fn name(w: Which) -> &'static str {
    match w {
        Which::Excess => "excess",
        Which::Polarisation => "polarisation",
        Which::Fine => "fine",
        Which::Control => "control",
        Which::T1 => "t1",
        Which::T2 => "t2",
        Which::T3 => "t3",
        Which::Eclipse => "eclipse",
        Which::Thermal => "thermal",
        Which::Dynamic => "dynamic",
        Which::All => "all",
    }
}

pub fn analyze(ctx: &Ctx, which: Which) -> CliResult<()> {
    let needs_catalogue = which != Which::T1 && which != Which::Thermal;
    let cat = if needs_catalogue {
        let cat = load(ctx)?;
        if cat.is_tagged() {
            cat
        } else {
            log::info!("catalogue is untagged; tagging in memory");
            tagged(ctx, cat)?
        }
    } else {
        Catalogue::default()
    };
    let list: Vec<Which> = if which == Which::All { ALL.to_vec() } else { vec![which] };
    let mut errors = Vec::new();
    for w in list {
        match run_one(ctx, &cat, w) {
            Ok(()) => println!("{}: ok", name(w)),
            Err(e) => {
                eprintln!("{}: {}", name(w), e.message);
                errors.push(e);
            }
        }
    }
    match errors.len() {
        0 => Ok(()),
        1 => Err(errors.remove(0)),
        n => Err(CliError {
            code: errors.iter().map(|e| e.code).max().unwrap(),
            message: format!("{n} analyses failed"),
        }),
    }
}

fn run_one(ctx: &Ctx, cat: &Catalogue, w: Which) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let (fc, mc) = (&cfg.analysis.fine, &cfg.analysis.mechanism);
    let src = &cat.provenance.sources;
    let out = &ctx.out;
    let err = CliError::analysis;
    match w {
        Which::Excess => {
            let r = dtc_excess(cat, cfg).map_err(err)?;
            write_envelope(ctx, "excess", src, &r)?;
            tables::excess(out, &r)
        }
        Which::Polarisation => {
            let r = PolarisationPair {
                pooled: polarisation_anomaly(cat, BaselineMode::Pooled, None, cfg).map_err(err)?,
                leave_one_out: polarisation_anomaly(cat, BaselineMode::LeaveOneOut, None, cfg).map_err(err)?,
            };
            write_envelope(ctx, "polarisation", src, &r)?;
            tables::polarisation(out, &r)
        }
        Which::Fine => {
            let r = fine_channel_scan(cat, fc.target_freq_mhz, fc.target_index, cfg).map_err(err)?;
            write_envelope(ctx, "fine", src, &r)?;
            tables::fine(out, &r)
        }
        Which::Control => {
            let r = cross_channel_control(cat, &fc.control_freqs_mhz, fc.target_index, cfg);
            write_envelope(ctx, "control", src, &r)?;
            tables::control(out, &r)
        }
        Which::T1 => {
            let r = T1Pair {
                clock: t1_harmonic_coincidence(&mc.fundamentals_khz, mc.centroid_mhz, mc.tolerance_khz),
                crystal: t1_harmonic_coincidence(&mc.crystal_khz, mc.centroid_mhz, mc.tolerance_khz),
            };
            write_envelope(ctx, "t1", src, &r)?;
            tables::t1(out, &r)
        }
        Which::T2 => {
            let r = t2_adjacent_bin(cat, fc.target_freq_mhz, fc.target_index, mc.bright_quantile, cfg).map_err(err)?;
            write_envelope(ctx, "t2", src, &r)?;
            tables::t2(out, &r)
        }
        Which::T3 => {
            let r = t3_satellite_ratios(cat, fc.target_freq_mhz, fc.target_index, mc.min_detections, cfg).map_err(err)?;
            write_envelope(ctx, "t3", src, &r)?;
            tables::t3(out, &r)
        }
        Which::Eclipse => {
            let r = eclipse_analysis(cat, cfg).map_err(err)?;
            write_envelope(ctx, "eclipse", src, &r)?;
            tables::eclipse(out, &r)
        }
        Which::Thermal => {
            let t = &cfg.analysis.thermal;
            let flux_jy = thermal_flux_estimate(t.emissivity, t.temperature_k, t.area_m2, t.wavelength_m, t.range_m).map_err(err)?;
            let r = ThermalResult {
                emissivity: t.emissivity,
                temperature_k: t.temperature_k,
                area_m2: t.area_m2,
                wavelength_m: t.wavelength_m,
                range_m: t.range_m,
                flux_jy,
            };
            write_envelope(ctx, "thermal", src, &r)
        }
        Which::Dynamic => {
            let d = &cfg.analysis.dynamic;
            let entries: Vec<DynamicEntry> = d
                .norad_ids
                .iter()
                .map(|&id| match dynamic_spectrum(cat, id, d.freq_mhz, d.pass_gap_s, cfg.range.reference_km) {
                    Ok(s) => DynamicEntry { norad_id: id, spectrum: Some(s), error: None },
                    Err(e) => DynamicEntry { norad_id: id, spectrum: None, error: Some(e.to_string()) },
                })
                .collect();
            write_envelope(ctx, "dynamic", src, &entries)?;
            tables::dynamic(out, &entries)?;
            if entries.iter().all(|e| e.spectrum.is_none()) {
                return Err(CliError::analysis("no dynamic spectrum could be built for the configured satellites"));
            }
            Ok(())
        }
        Which::All => unreachable!("expanded by the caller"),
    }
}

fn raw_detection_csv(cat: &Catalogue, ctx: &Ctx) -> CliResult<Vec<u8>> {
    let c = &ctx.cfg.columns;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        &c.norad_id,
        &c.utc,
        &c.freq_mhz,
        &c.fine_channel_index,
        &c.pol,
        &c.flux_jy,
        &c.azimuth_deg,
        &c.elevation_deg,
        &c.range_km,
    ];
    let csv_err = |e: csv::Error| CliError::input(e);
    w.write_record(header).map_err(csv_err)?;
    for e in &cat.events {
        let pol = match e.pol_feed {
            Polarisation::XX => "XX",
            Polarisation::YY => "YY",
        };
        w.write_record([
            e.norad_id.to_string(),
            e.epoch_utc.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            e.freq_mhz.to_string(),
            e.fine_channel_index.to_string(),
            pol.to_string(),
            e.flux_jy.to_string(),
            e.azimuth_deg.to_string(),
            e.elevation_deg.to_string(),
            e.range_km.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::input(e.to_string()))
}

pub fn synth(ctx: &Ctx, spec_path: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let mut spec = match spec_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            SynthSpec::from_toml_str(&text).map_err(CliError::input)?
        }
        None => SynthSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let site = ctx.cfg.observatory().map_err(CliError::input)?;
    let mut s = generate(&spec, &site, &ctx.cfg.shadow_model()).map_err(CliError::input)?;

    let dir = ctx.out.join("synth");
    fs::create_dir_all(&dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let raw = raw_detection_csv(&s.catalogue, ctx)?;
    fs::write(dir.join("detections.csv"), &raw).map_err(CliError::input)?;
    let mut bus = String::from("norad_id,bus,launch_date\n");
    for (id, e) in &s.bus_table.entries {
        let date = e.launch_date.map(|d| d.to_string()).unwrap_or_default();
        bus.push_str(&format!("{id},{},{date}\n", e.bus_label));
    }
    fs::write(dir.join("bus_table.csv"), &bus).map_err(CliError::input)?;
    s.catalogue.provenance.sources.insert(0, SourceDigest::of("detections", &raw));

    let report = persist(ctx, &s.catalogue)?;
    write_json(&ctx.out.join("ground_truth.json"), &s.truth)?;
    let counts: BTreeMap<&str, usize> = s.truth.populations.iter().map(|p| (p.bus_label.as_str(), p.n_stacked)).collect();
    log::info!("stacked detections by bus: {counts:?}");
    println!("synthesised seed {}: {}", spec.seed, summary_line(&report));
    Ok(())
}
