use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalogue::{Catalogue, DetectionEvent, N_FINE};
use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380_649e-23;
/// 1 Jy in W m⁻² Hz⁻¹.
pub const JANSKY: f64 = 1e-26;

/// Rayleigh–Jeans flux density (Jy) of a grey body of emissivity ε,
/// temperature T and projected area A at wavelength λ and distance r.
pub fn thermal_flux_estimate(emissivity: f64, temperature_k: f64, area_m2: f64, wavelength_m: f64, range_m: f64) -> Result<f64> {
    let args = [emissivity, temperature_k, area_m2, wavelength_m, range_m];
    if args.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidInput(format!("thermal estimate needs positive inputs, got {args:?}")));
    }
    let s = 2.0 * emissivity * BOLTZMANN * temperature_k * area_m2 / (wavelength_m * wavelength_m * range_m * range_m);
    Ok(s / JANSKY)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicSpectrum {
    pub norad_id: u32,
    pub freq_mhz: f64,
    pub n_passes: usize,
    /// Index of the selected pass in time order.
    pub pass_index: usize,
    pub start_utc: DateTime<Utc>,
    pub end_utc: DateTime<Utc>,
    pub duration_s: f64,
    pub integrated_s_norm: f64,
    pub epochs: Vec<DateTime<Utc>>,
    /// Rows are epochs, columns fine bins 0–30; range-corrected flux.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Mean over bins per epoch.
    pub time_marginal: Vec<Option<f64>>,
    /// Mean over epochs per bin.
    pub freq_marginal: Vec<Option<f64>>,
    pub elevation_deg: Vec<f64>,
}

fn mean_of(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    crate::stats::mean(&vals)
}

/// Time by fine-channel matrix of the brightest pass of one satellite at
/// one coarse channel. Passes are split where consecutive epochs are more
/// than `gap_s` apart; the pass with the largest summed range-corrected
/// fine-row flux is kept.
pub fn dynamic_spectrum(cat: &Catalogue, norad_id: u32, freq_mhz: f64, gap_s: f64, r_ref_km: f64) -> Result<DynamicSpectrum> {
    let mut rows: Vec<&DetectionEvent> = cat
        .fine_rows()
        .filter(|e| e.norad_id == norad_id && e.on_channel(freq_mhz))
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no fine rows for NORAD {norad_id} at {freq_mhz:.3} MHz"
        )));
    }
    rows.sort_by_key(|e| (e.epoch_utc, e.fine_channel_index));

    let mut passes: Vec<Vec<&DetectionEvent>> = vec![Vec::new()];
    for e in rows {
        let current = passes.last_mut().unwrap();
        if let Some(prev) = current.last() {
            let gap = (e.epoch_utc - prev.epoch_utc).num_milliseconds() as f64 / 1e3;
            if gap > gap_s {
                passes.push(Vec::new());
            }
        }
        passes.last_mut().unwrap().push(e);
    }
    let integrated: Vec<f64> = passes.iter().map(|p| p.iter().map(|e| e.s_norm(r_ref_km)).sum()).collect();
    // first pass wins ties
    let pass_index = (0..passes.len())
        .fold(0, |best, i| if integrated[i] > integrated[best] { i } else { best });
    let pass = &passes[pass_index];

    let mut epochs: Vec<DateTime<Utc>> = pass.iter().map(|e| e.epoch_utc).collect();
    epochs.dedup();
    let mut matrix = vec![vec![None; N_FINE]; epochs.len()];
    let mut elevation_deg = vec![f64::NAN; epochs.len()];
    let mut row = 0;
    for e in pass {
        while epochs[row] != e.epoch_utc {
            row += 1;
        }
        matrix[row][e.fine_channel_index as usize] = Some(e.s_norm(r_ref_km));
        elevation_deg[row] = e.elevation_deg;
    }
    let time_marginal = matrix.iter().map(|r| mean_of(r.iter().copied())).collect();
    let freq_marginal = (0..N_FINE).map(|b| mean_of(matrix.iter().map(|r| r[b]))).collect();
    let (start_utc, end_utc) = (epochs[0], *epochs.last().unwrap());

    Ok(DynamicSpectrum {
        norad_id,
        freq_mhz,
        n_passes: passes.len(),
        pass_index,
        start_utc,
        end_utc,
        duration_s: (end_utc - start_utc).num_milliseconds() as f64 / 1e3,
        integrated_s_norm: integrated[pass_index],
        epochs,
        matrix,
        time_marginal,
        freq_marginal,
        elevation_deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_reference() {
        let s = thermal_flux_estimate(0.3, 300.0, 100.0, 1.3, 1e6).unwrap();
        assert!((s - 1.4705e-5).abs() < 1e-8, "{s}");
        let s2 = thermal_flux_estimate(0.3, 300.0, 100.0, 2.6, 1e6).unwrap();
        assert!((s / s2 - 4.0).abs() < 1e-12);
        let s3 = thermal_flux_estimate(0.3, 300.0, 100.0, 1.3, 2e6).unwrap();
        assert!((s / s3 - 4.0).abs() < 1e-12);
        assert!(thermal_flux_estimate(0.0, 300.0, 100.0, 1.3, 1e6).is_err());
    }
}
