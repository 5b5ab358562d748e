//! Flat CSV companions of the JSON reports, under `<out>/tables/`.

use std::fs;
use std::path::Path;

use chrono::SecondsFormat;
use uemr::analyses::*;
use uemr::stats::RatioWithCI;

use crate::commands::{DynamicEntry, PolarisationPair, PopulationsReport, T1Pair};
use crate::envelope::tables_dir;
use crate::{CliError, CliResult};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write(out: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let dir = tables_dir(out);
    fs::create_dir_all(&dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn ratio_cells(r: &RatioWithCI) -> [String; 3] {
    [r.estimate.to_string(), r.ci_low.to_string(), r.ci_high.to_string()]
}

fn ratio_opt_cells(r: Option<&RatioWithCI>) -> [String; 3] {
    r.map(ratio_cells).unwrap_or_default()
}

pub fn populations(out: &Path, p: &PopulationsReport) -> CliResult<()> {
    let rows = p
        .rows
        .iter()
        .map(|r| {
            vec![r.label.clone(), r.bus_labels.join(";"), r.n_satellites.to_string(), r.n_detections.to_string()]
        })
        .collect();
    write(out, "populations", &["population", "bus_labels", "n_satellites", "n_detections"], rows)
}

pub fn excess(out: &Path, r: &ExcessReport) -> CliResult<()> {
    let rows = r
        .reductions
        .iter()
        .map(|x| {
            let mut v = vec![x.reduction.label().to_string(), x.n_dtc.to_string(), x.n_ku.to_string()];
            v.extend(ratio_cells(&x.ratio));
            v.extend([x.mwu.p_two_sided.to_string(), x.mwu.cliffs_delta.to_string()]);
            v
        })
        .collect();
    write(
        out,
        "excess_reductions",
        &["reduction", "n_dtc", "n_ku", "ratio", "ci_low", "ci_high", "mwu_p", "cliffs_delta"],
        rows,
    )?;
    let rows = r
        .per_channel
        .iter()
        .map(|c| {
            let mut v = vec![c.freq_mhz.to_string(), c.n_dtc.to_string(), c.n_ku.to_string()];
            v.extend(ratio_cells(&c.ratio));
            v.extend([c.ks_p.to_string(), c.mwu_p.to_string(), c.cliffs_delta.to_string()]);
            v
        })
        .collect();
    write(
        out,
        "per_channel_excess",
        &["freq_mhz", "n_dtc", "n_ku", "ratio", "ci_low", "ci_high", "ks_p", "mwu_p", "cliffs_delta"],
        rows,
    )?;
    let rows = r
        .occupancy
        .iter()
        .map(|(f, d, k)| vec![f.to_string(), d.to_string(), k.to_string()])
        .collect();
    write(out, "occupancy", &["freq_mhz", "n_dtc", "n_ku"], rows)
}

pub fn polarisation(out: &Path, p: &PolarisationPair) -> CliResult<()> {
    let mut rows = Vec::new();
    for (mode, rep) in [("pooled", &p.pooled), ("leave_one_out", &p.leave_one_out)] {
        for c in &rep.rows {
            rows.push(vec![
                mode.to_string(),
                c.freq_mhz.to_string(),
                c.n.to_string(),
                c.n_xx.to_string(),
                c.xx_fraction.to_string(),
                c.baseline.to_string(),
                c.deviation.to_string(),
                c.p_value.to_string(),
                c.log10_p.to_string(),
                c.wilson_low.to_string(),
                c.wilson_high.to_string(),
                c.bh_flag.to_string(),
            ]);
        }
    }
    write(
        out,
        "polarisation",
        &[
            "baseline", "freq_mhz", "n", "n_xx", "xx_fraction", "expected", "deviation", "p_value", "log10_p", "wilson_low",
            "wilson_high", "bh_flag",
        ],
        rows,
    )
}

pub fn fine(out: &Path, r: &FineChannelReport) -> CliResult<()> {
    let rows = r
        .per_bin
        .iter()
        .map(|b| {
            vec![
                b.index.to_string(),
                b.n.to_string(),
                opt(b.mean),
                opt(b.median),
                opt(b.p95),
                opt(b.xx_fraction),
                opt(b.z),
            ]
        })
        .collect();
    write(out, "fine_bins", &["index", "n", "mean", "median", "p95", "xx_fraction", "z"], rows)
}

pub fn control(out: &Path, rows: &[ControlRow]) -> CliResult<()> {
    let rows = rows
        .iter()
        .map(|c| vec![c.freq_mhz.to_string(), c.n_rows.to_string(), opt(c.z), c.note.clone().unwrap_or_default()])
        .collect();
    write(out, "control", &["freq_mhz", "n_rows", "z_target", "note"], rows)
}

pub fn t1(out: &Path, p: &T1Pair) -> CliResult<()> {
    let mut rows = Vec::new();
    for (list, rep) in [("clock", &p.clock), ("crystal", &p.crystal)] {
        for r in &rep.rows {
            rows.push(vec![
                list.to_string(),
                r.fundamental_khz.to_string(),
                r.harmonic.to_string(),
                r.predicted_mhz.to_string(),
                r.residual_khz.to_string(),
                r.matched.to_string(),
            ]);
        }
    }
    write(out, "t1_harmonics", &["list", "fundamental_khz", "harmonic", "predicted_mhz", "residual_khz", "matched"], rows)
}

pub fn t2(out: &Path, r: &T2Report) -> CliResult<()> {
    let rows = r
        .bin_means
        .iter()
        .zip(&r.z)
        .enumerate()
        .map(|(i, (m, z))| {
            let baseline = r.baseline_bins.contains(&(i as u8));
            vec![i.to_string(), m.to_string(), z.to_string(), baseline.to_string()]
        })
        .collect();
    write(out, "t2_bins", &["index", "bright_mean", "z", "in_baseline"], rows)
}

pub fn t3(out: &Path, r: &T3Report) -> CliResult<()> {
    let rows = r.ratios.iter().map(|(id, x)| vec![id.to_string(), x.to_string()]).collect();
    write(out, "t3_ratios", &["norad_id", "ratio"], rows)
}

fn stratum_kind(k: StratumKind) -> &'static str {
    match k {
        StratumKind::AltitudeKm => "altitude_km",
        StratumKind::LatitudeDeg => "latitude_deg",
        StratumKind::FrequencyMhz => "frequency_mhz",
    }
}

pub fn eclipse(out: &Path, r: &EclipseReport) -> CliResult<()> {
    let rows = r
        .populations
        .iter()
        .map(|p| {
            let mut v = vec![
                p.group.label().to_string(),
                p.n_satellites.to_string(),
                p.n_illuminated.to_string(),
                p.n_eclipsed.to_string(),
                opt(p.median_illuminated),
                opt(p.median_eclipsed),
            ];
            v.extend(ratio_opt_cells(p.detection_level.as_ref()));
            v.extend(ratio_opt_cells(p.satellite_level.as_ref()));
            v
        })
        .collect();
    write(
        out,
        "eclipse_populations",
        &[
            "group", "n_satellites", "n_illuminated", "n_eclipsed", "median_illuminated", "median_eclipsed", "det_ratio",
            "det_ci_low", "det_ci_high", "sat_ratio", "sat_ci_low", "sat_ci_high",
        ],
        rows,
    )?;
    let rows = r
        .strata
        .iter()
        .map(|s| {
            let mut v = vec![
                s.group.label().to_string(),
                stratum_kind(s.kind).to_string(),
                s.lo.to_string(),
                s.hi.to_string(),
                s.n_illuminated.to_string(),
                s.n_eclipsed.to_string(),
            ];
            v.extend(ratio_cells(&s.ratio));
            v
        })
        .collect();
    write(
        out,
        "eclipse_strata",
        &["group", "kind", "lo", "hi", "n_illuminated", "n_eclipsed", "ratio", "ci_low", "ci_high"],
        rows,
    )?;
    let rows = r
        .per_satellite
        .iter()
        .flat_map(|s| s.ratios.iter().map(|(id, x)| vec![s.group.label().to_string(), id.to_string(), x.to_string()]))
        .collect();
    write(out, "eclipse_per_satellite", &["group", "norad_id", "ratio"], rows)
}

pub fn dynamic(out: &Path, entries: &[DynamicEntry]) -> CliResult<()> {
    for e in entries {
        let Some(s) = &e.spectrum else { continue };
        let mut rows = Vec::new();
        for (t, row) in s.matrix.iter().enumerate() {
            for (bin, v) in row.iter().enumerate() {
                rows.push(vec![
                    s.epochs[t].to_rfc3339_opts(SecondsFormat::AutoSi, true),
                    bin.to_string(),
                    opt(*v),
                    s.elevation_deg[t].to_string(),
                ]);
            }
        }
        write(out, &format!("dynamic_{}", e.norad_id), &["utc", "fine_index", "s_norm_jy", "elevation_deg"], rows)?;
    }
    Ok(())
}
