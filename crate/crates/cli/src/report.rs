//! Markdown rendering of stored results. Nothing is recomputed here.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use uemr::analyses::*;
use uemr::stats::RatioWithCI;
use uemr::synth::GroundTruth;

use crate::commands::{DynamicEntry, PolarisationPair, PopulationsReport, T1Pair, ThermalResult};
use crate::envelope::{read_json, reports_dir, Envelope};
use crate::{CliError, CliResult, Ctx};

struct Doc {
    text: String,
    warnings: Vec<String>,
}

impl Doc {
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn heading(&mut self, s: &str) {
        self.line(format!("\n## {s}\n"));
    }

    fn table(&mut self, header: &[&str], rows: &[Vec<String>]) {
        self.line(format!("| {} |", header.join(" | ")));
        self.line(format!("|{}", "---|".repeat(header.len())));
        for r in rows {
            self.line(format!("| {} |", r.join(" | ")));
        }
    }

    fn missing(&mut self, name: &str, why: &str) {
        let w = format!("{name}: {why}");
        eprintln!("warning: {w}");
        self.line(format!("_Not available ({why})._"));
        self.warnings.push(w);
    }

    fn load<T: DeserializeOwned>(&mut self, dir: &Path, name: &str) -> Option<Envelope<T>> {
        let path = dir.join(format!("{name}.json"));
        if !path.is_file() {
            self.missing(name, "no stored result; run `uemr analyze`");
            return None;
        }
        match read_json(&path) {
            Ok(v) => Some(v),
            Err(e) => {
                self.missing(name, &format!("unreadable: {e}"));
                None
            }
        }
    }
}

fn f(x: f64, dp: usize) -> String {
    if x.is_finite() {
        format!("{x:.dp$}")
    } else {
        "n/a".into()
    }
}

fn fo(x: Option<f64>, dp: usize) -> String {
    x.map_or_else(|| "n/a".into(), |v| f(v, dp))
}

/// Underflowed p-values are shown through their base-10 logarithm.
fn pval(p: f64, log10_p: f64) -> String {
    if p > 1e-300 {
        if p >= 1e-3 {
            format!("{p:.4}")
        } else {
            format!("{p:.2e}")
        }
    } else if log10_p.is_finite() {
        format!("10^{log10_p:.1}")
    } else {
        "0".into()
    }
}

fn ci(r: &RatioWithCI) -> String {
    format!("{} [{}, {}]", f(r.estimate, 3), f(r.ci_low, 3), f(r.ci_high, 3))
}

fn ci_opt(r: Option<&RatioWithCI>) -> String {
    r.map_or_else(|| "undefined".into(), ci)
}

pub fn render(ctx: &Ctx) -> CliResult<()> {
    let dir = reports_dir(&ctx.out);
    let truth: Option<GroundTruth> = {
        let p = ctx.out.join("ground_truth.json");
        p.is_file().then(|| read_json(&p).ok()).flatten()
    };
    let mut d = Doc { text: String::new(), warnings: Vec::new() };
    d.line("# Unintended emission analysis report");
    if !dir.is_dir() {
        d.line("");
        d.missing("reports", &format!("{} does not exist", dir.display()));
    }
    if let Some(t) = &truth {
        d.line(format!("\nSynthetic catalogue, generator seed {}; ground truth shown alongside.", t.seed));
    }

    d.heading("Populations");
    if let Some(e) = d.load::<PopulationsReport>(&dir, "populations") {
        provenance(&mut d, &e);
        let r = &e.result;
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|p| vec![p.label.clone(), p.bus_labels.join(", "), p.n_satellites.to_string(), p.n_detections.to_string()])
            .collect();
        d.table(&["Population", "Bus labels", "Satellites", "Stacked detections"], &rows);
        d.line(format!(
            "\nClassified total: {} satellites, {} detections. Rejected rows: {}. Duplicate bus entries: {}.",
            r.total_satellites, r.total_detections, r.rejected_rows, r.bus_duplicates
        ));
        if let Some(c) = &r.cuts {
            d.line(format!(
                "Quality cuts: {} of {} events retained ({} range, {} flux, {} elevation removed); {} analysed stacked.",
                c.retained_events, c.input_events, c.nonpositive_range, c.nonpositive_flux, c.nonpositive_elevation, c.analysed_stacked
            ));
        }
    }

    let excess = excess_section(&mut d, &dir, truth.as_ref());
    let pol = polarisation_section(&mut d, &dir, truth.as_ref());
    let fine = fine_section(&mut d, &dir, truth.as_ref());
    let (t2, t3) = mechanism_section(&mut d, &dir);
    let ecl = eclipse_section(&mut d, &dir, truth.as_ref());

    d.heading("Thermal emission bound");
    if let Some(e) = d.load::<ThermalResult>(&dir, "thermal") {
        let t = &e.result;
        d.line(format!(
            "Emissivity {}, temperature {} K, area {} m², wavelength {} m, range {} m: flux density {:.4e} Jy.",
            t.emissivity, t.temperature_k, t.area_m2, t.wavelength_m, t.range_m, t.flux_jy
        ));
    }

    let dyn_path = dir.join("dynamic.json");
    if dyn_path.is_file() {
        d.heading("Dynamic spectra");
        if let Some(e) = d.load::<Vec<DynamicEntry>>(&dir, "dynamic") {
            let rows: Vec<Vec<String>> = e
                .result
                .iter()
                .map(|x| match &x.spectrum {
                    Some(s) => vec![
                        x.norad_id.to_string(),
                        s.n_passes.to_string(),
                        s.start_utc.to_rfc3339(),
                        f(s.duration_s, 0),
                        s.epochs.len().to_string(),
                        f(s.integrated_s_norm, 2),
                    ],
                    None => vec![x.norad_id.to_string(), x.error.clone().unwrap_or_default(), String::new(), String::new(), String::new(), String::new()],
                })
                .collect();
            d.table(&["NORAD", "Passes", "Selected pass start", "Duration (s)", "Epochs", "Integrated S_norm (Jy)"], &rows);
        }
    }

    d.heading("Effect-size summary");
    let mut rows = Vec::new();
    if let Some(x) = excess {
        rows.push(vec!["DTC / Ku median flux".into(), ci(&x.0), format!("Cliff's δ {}", f(x.1, 3))]);
    }
    if let Some(n) = pol {
        rows.push(vec!["Channels with polarisation anomaly (BH)".into(), n.to_string(), String::new()]);
    }
    if let Some((z, thr)) = fine {
        rows.push(vec!["Fine-bin z at target".into(), f(z, 2), format!("Bonferroni threshold {}", f(thr, 3))]);
    }
    if let Some(z) = t2 {
        rows.push(vec!["Target-bin z in bright subset".into(), f(z, 2), String::new()]);
    }
    if let Some(r) = t3 {
        rows.push(vec!["Top-decile / bottom-half satellite ratio".into(), f(r, 3), String::new()]);
    }
    for (label, r) in ecl {
        rows.push(vec![format!("Illuminated / eclipsed median flux, {label}"), r, String::new()]);
    }
    if rows.is_empty() {
        d.line("_No stored results._");
    } else {
        d.table(&["Quantity", "Value", "Note"], &rows);
    }

    if !d.warnings.is_empty() {
        d.heading("Warnings");
        for w in d.warnings.clone() {
            d.line(format!("- {w}"));
        }
    }

    let path = ctx.out.join("report.md");
    fs::create_dir_all(&ctx.out).map_err(|e| CliError::input(format!("{}: {e}", ctx.out.display())))?;
    fs::write(&path, &d.text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    println!("wrote {} ({} warnings)", path.display(), d.warnings.len());
    Ok(())
}

fn provenance<T>(d: &mut Doc, e: &Envelope<T>) {
    let src: Vec<String> = e.sources.iter().map(|s| format!("{} sha256:{}", s.label, &s.sha256[..12.min(s.sha256.len())])).collect();
    d.line(format!("_Seed {} (master {}); sources: {}._\n", e.seed, e.master_seed, if src.is_empty() { "none".into() } else { src.join(", ") }));
}

fn excess_section(d: &mut Doc, dir: &Path, truth: Option<&GroundTruth>) -> Option<(RatioWithCI, f64)> {
    d.heading("DTC flux excess");
    let e = d.load::<ExcessReport>(dir, "excess")?;
    provenance(d, &e);
    let r = &e.result;
    let with_truth = truth.is_some();
    let mut header = vec!["Reduction", "N DTC", "N Ku", "Ratio [95% CI]", "MWU p", "Cliff's δ"];
    if with_truth {
        header.push("Ground truth");
    }
    let rows: Vec<Vec<String>> = r
        .reductions
        .iter()
        .map(|x| {
            let mut v = vec![
                x.reduction.label().to_string(),
                x.n_dtc.to_string(),
                x.n_ku.to_string(),
                ci(&x.ratio),
                pval(x.mwu.p_two_sided, x.mwu.p_two_sided.log10()),
                f(x.mwu.cliffs_delta, 3),
            ];
            if let Some(t) = truth {
                v.push(fo(t.dtc_ku_ratio, 3));
            }
            v
        })
        .collect();
    d.table(&header, &rows);
    d.line(format!("\nHeadline reduction: {}.", r.headline.label()));
    if !r.per_channel.is_empty() {
        d.line(format!("\nPer-channel comparison (channels with at least {} DTC detections):\n", r.min_channel_dtc));
        let rows: Vec<Vec<String>> = r
            .per_channel
            .iter()
            .map(|c| {
                vec![
                    f(c.freq_mhz, 3),
                    c.n_dtc.to_string(),
                    c.n_ku.to_string(),
                    ci(&c.ratio),
                    pval(c.ks_p, c.ks_p.log10()),
                    pval(c.mwu_p, c.mwu_p.log10()),
                    f(c.cliffs_delta, 3),
                ]
            })
            .collect();
        d.table(&["Freq (MHz)", "N DTC", "N Ku", "Ratio [95% CI]", "KS p", "MWU p", "Cliff's δ"], &rows);
    }
    let h = r.headline_result();
    Some((h.ratio.clone(), h.mwu.cliffs_delta))
}

fn polarisation_section(d: &mut Doc, dir: &Path, truth: Option<&GroundTruth>) -> Option<usize> {
    d.heading("Polarisation anomaly");
    let e = d.load::<PolarisationPair>(dir, "polarisation")?;
    provenance(d, &e);
    for (title, r) in [("Pooled baseline", &e.result.pooled), ("Leave-one-out baseline", &e.result.leave_one_out)] {
        d.line(format!(
            "\n{title} (pooled XX fraction {}, BH q = {}, {} channels flagged):\n",
            f(r.pooled_baseline, 4),
            r.fdr_q,
            r.n_flagged
        ));
        let mut header = vec!["Freq (MHz)", "N", "XX fraction", "Wilson 95%", "Expected", "p", "BH"];
        if truth.is_some() {
            header.push("True P(XX)");
        }
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|c| {
                let mut v = vec![
                    f(c.freq_mhz, 3),
                    c.n.to_string(),
                    f(c.xx_fraction, 4),
                    format!("[{}, {}]", f(c.wilson_low, 4), f(c.wilson_high, 4)),
                    f(c.baseline, 4),
                    pval(c.p_value, c.log10_p),
                    if c.bh_flag { "yes".into() } else { String::new() },
                ];
                if let Some(t) = truth {
                    let p = t
                        .channel_xx_probability
                        .iter()
                        .find(|b| (b.freq_mhz - c.freq_mhz).abs() < 0.05)
                        .map(|b| b.xx_probability);
                    v.push(fo(p, 3));
                }
                v
            })
            .collect();
        d.table(&header, &rows);
        for n in &r.notes {
            d.line(format!("\n- {n}"));
        }
    }
    Some(e.result.pooled.n_flagged)
}

fn fine_section(d: &mut Doc, dir: &Path, truth: Option<&GroundTruth>) -> Option<(f64, f64)> {
    d.heading("Fine-channel scan");
    let e = d.load::<FineChannelReport>(dir, "fine");
    let mut out = None;
    if let Some(e) = e {
        provenance(d, &e);
        let r = &e.result;
        d.line(format!(
            "Channel {} MHz, {} rows. Target bin {}: z = {} (inter-bin mean {}, sd {}); max |z| {}; Bonferroni threshold {} (normal approximation {}).\n",
            f(r.coarse_freq_mhz, 3),
            r.n_rows,
            r.target_index,
            f(r.z_target, 2),
            f(r.inter_bin_mu, 3),
            f(r.inter_bin_sigma, 3),
            f(r.max_abs_z, 2),
            f(r.bonferroni_threshold, 3),
            f(r.bonferroni_threshold_normal, 3)
        ));
        let rows: Vec<Vec<String>> = r
            .per_bin
            .iter()
            .map(|b| vec![b.index.to_string(), b.n.to_string(), fo(b.mean, 3), fo(b.median, 3), fo(b.p95, 3), fo(b.xx_fraction, 3), fo(b.z, 2)])
            .collect();
        d.table(&["Bin", "N", "Mean", "Median", "P95", "XX fraction", "z"], &rows);
        if let Some(inj) = truth.and_then(|t| t.injector.as_ref()) {
            d.line(format!(
                "\nGround truth: injected bins {:?} at {} MHz, amplitude {}, {} active satellites.",
                inj.bins,
                inj.freq_mhz,
                inj.amplitude,
                inj.active_satellites.len()
            ));
        }
        out = Some((r.z_target, r.bonferroni_threshold));
    }
    d.line("\nControl channels:\n");
    if let Some(e) = d.load::<Vec<ControlRow>>(dir, "control") {
        let rows: Vec<Vec<String>> = e
            .result
            .iter()
            .map(|c| vec![f(c.freq_mhz, 3), c.n_rows.to_string(), fo(c.z, 2), c.note.clone().unwrap_or_default()])
            .collect();
        d.table(&["Freq (MHz)", "Rows", "z at target bin", "Note"], &rows);
    }
    out
}

fn mechanism_section(d: &mut Doc, dir: &Path) -> (Option<f64>, Option<f64>) {
    d.heading("Mechanism tests");
    d.line("### Harmonic coincidence\n");
    if let Some(e) = d.load::<T1Pair>(dir, "t1") {
        for (title, r) in [("Clock fundamentals", &e.result.clock), ("Crystal candidates", &e.result.crystal)] {
            let matched: Vec<String> = r
                .rows
                .iter()
                .filter(|x| x.matched)
                .map(|x| format!("{} kHz × {} = {} MHz ({} kHz)", x.fundamental_khz, x.harmonic, f(x.predicted_mhz, 4), f(x.residual_khz, 1)))
                .collect();
            d.line(format!(
                "- {title}: {} of {} within ±{} kHz of {} MHz; expected by chance {} (deduplicated {} vs {}).",
                r.observed_matches,
                r.rows.len(),
                r.tolerance_khz,
                r.target_mhz,
                f(r.expected_chance, 3),
                r.dedup_observed,
                f(r.dedup_expected, 3)
            ));
            for m in matched {
                d.line(format!("  - {m}"));
            }
        }
    }
    d.line("\n### Bright-detection bin test\n");
    let t2 = d.load::<T2Report>(dir, "t2").map(|e| {
        let r = &e.result;
        d.line(format!(
            "{} complete detections ({} incomplete dropped); {} above the {} quantile (cut {}). Baseline mean {}, sd {}. z below {}, target {}, above {}.",
            r.n_detections,
            r.n_incomplete,
            r.n_bright,
            r.bright_quantile,
            f(r.p_cut, 3),
            f(r.baseline_mu, 3),
            f(r.baseline_sigma, 3),
            fo(r.z_below, 2),
            f(r.z_target, 2),
            fo(r.z_above, 2)
        ));
        r.z_target
    });
    d.line("\n### Per-satellite target-bin ratios\n");
    let t3 = d.load::<T3Report>(dir, "t3").map(|e| {
        let r = &e.result;
        d.table(
            &["Satellites", "Median", "Mean", "P95", "Max", "Top decile", "Bottom half", "Top / bottom", "Over outlier", "z excl. outliers"],
            &[vec![
                r.n_satellites.to_string(),
                f(r.median_r, 3),
                f(r.mean_r, 3),
                f(r.p95_r, 3),
                f(r.max_r, 3),
                f(r.top_decile_mean, 3),
                f(r.bottom_half_mean, 3),
                f(r.top_bottom_ratio, 3),
                r.n_over_outlier.to_string(),
                fo(r.z_target_excluding, 2),
            ]],
        );
        d.line(format!("\nFraction of satellites above {}: {}.", r.excess_ratio, f(r.frac_over_excess, 3)));
        r.top_bottom_ratio
    });
    (t2, t3)
}

fn eclipse_section(d: &mut Doc, dir: &Path, truth: Option<&GroundTruth>) -> Vec<(String, String)> {
    d.heading("Eclipse dependence");
    let Some(e) = d.load::<EclipseReport>(dir, "eclipse") else { return Vec::new() };
    provenance(d, &e);
    let r = &e.result;
    let mut header = vec!["Group", "Satellites", "N illum.", "N eclipsed", "Median illum.", "Median eclipsed", "Detection-level ratio", "Satellite-level ratio"];
    if truth.is_some() {
        header.push("True ratio");
    }
    let rows: Vec<Vec<String>> = r
        .populations
        .iter()
        .map(|p| {
            let mut v = vec![
                p.group.label().to_string(),
                p.n_satellites.to_string(),
                p.n_illuminated.to_string(),
                p.n_eclipsed.to_string(),
                fo(p.median_illuminated, 3),
                fo(p.median_eclipsed, 3),
                ci_opt(p.detection_level.as_ref()),
                ci_opt(p.satellite_level.as_ref()),
            ];
            if let Some(t) = truth {
                let want = match p.group {
                    EclipseGroup::Dtc => Some(uemr::catalogue::Population::Dtc),
                    EclipseGroup::KuOnly | EclipseGroup::MatchedKu => Some(uemr::catalogue::Population::KuOnly),
                    EclipseGroup::Pooled => None,
                };
                let tr = want.and_then(|w| t.populations.iter().find(|x| x.population == w)).map(|x| x.eclipse_ratio);
                v.push(fo(tr, 3));
            }
            v
        })
        .collect();
    d.table(&header, &rows);
    if !r.interactions.is_empty() {
        d.line("\nInteraction between groups (difference of log ratios):\n");
        let rows: Vec<Vec<String>> = r
            .interactions
            .iter()
            .map(|i| {
                let x = &i.result;
                vec![
                    format!("{} vs {}", i.a.label(), i.b.label()),
                    format!("{} [{}, {}]", f(x.diff.estimate, 3), f(x.diff.ci_low, 3), f(x.diff.ci_high, 3)),
                    format!("{} [{}, {}]", f(x.ratio_of_ratios.estimate, 3), f(x.ratio_of_ratios.ci_low, 3), f(x.ratio_of_ratios.ci_high, 3)),
                    pval(x.p_two_sided, x.p_two_sided.log10()),
                ]
            })
            .collect();
        d.table(&["Groups", "Δ log ratio", "Ratio of ratios", "p"], &rows);
    }
    if !r.strata.is_empty() {
        d.line("\nStratified ratios:\n");
        let rows: Vec<Vec<String>> = r
            .strata
            .iter()
            .map(|s| {
                let kind = match s.kind {
                    StratumKind::AltitudeKm => "altitude (km)",
                    StratumKind::LatitudeDeg => "latitude (deg)",
                    StratumKind::FrequencyMhz => "frequency (MHz)",
                };
                vec![
                    s.group.label().to_string(),
                    kind.to_string(),
                    format!("{}–{}", f(s.lo, 1), f(s.hi, 1)),
                    s.n_illuminated.to_string(),
                    s.n_eclipsed.to_string(),
                    ci(&s.ratio),
                ]
            })
            .collect();
        d.table(&["Group", "Stratum", "Range", "N illum.", "N eclipsed", "Ratio [95% CI]"], &rows);
    }
    if !r.per_satellite.is_empty() {
        d.line("\nPer-satellite ratios:\n");
        let rows: Vec<Vec<String>> = r
            .per_satellite
            .iter()
            .map(|s| {
                vec![
                    s.group.label().to_string(),
                    s.ratios.len().to_string(),
                    format!("{} [{}, {}]", f(s.median.estimate, 3), f(s.median.ci_low, 3), f(s.median.ci_high, 3)),
                    format!("{}–{}", f(s.iqr.0, 3), f(s.iqr.1, 3)),
                    f(s.frac_below_1, 3),
                    f(s.frac_below_075, 3),
                ]
            })
            .collect();
        d.table(&["Group", "Satellites", "Median [95% CI]", "IQR", "< 1", "< 0.75"], &rows);
    }
    if let Some(t) = r.time_avg_factor {
        d.line(format!("\nTime-averaged to illuminated-only DTC emission factor: {}.", f(t, 4)));
    }
    for n in &r.notes {
        d.line(format!("\n- {n}"));
    }
    let mut summary = Vec::new();
    for p in &r.populations {
        if matches!(p.group, EclipseGroup::Dtc | EclipseGroup::KuOnly) {
            summary.push((p.group.label().to_string(), ci_opt(p.detection_level.as_ref())));
        }
    }
    summary
}
