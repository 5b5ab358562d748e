use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Row {
    pub fundamental_khz: f64,
    pub harmonic: u64,
    pub predicted_mhz: f64,
    pub residual_khz: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Report {
    pub target_mhz: f64,
    pub tolerance_khz: f64,
    pub rows: Vec<T1Row>,
    pub observed_matches: usize,
    /// Σ min(1, 2Δf/f₀) over the listed fundamentals.
    pub expected_chance: f64,
    /// The same sum with repeated fundamentals counted once.
    pub dedup_expected: f64,
    pub dedup_observed: usize,
}

fn expected(f0: impl Iterator<Item = f64>, tol_khz: f64) -> f64 {
    f0.map(|f| (2.0 * tol_khz / f).min(1.0)).sum()
}

/// Nearest-harmonic coincidence of each fundamental with the target.
pub fn t1_harmonic_coincidence(fundamentals_khz: &[f64], target_mhz: f64, tol_khz: f64) -> T1Report {
    let target_khz = target_mhz * 1e3;
    let rows: Vec<T1Row> = fundamentals_khz
        .iter()
        .map(|&f0| {
            let n = (target_khz / f0).round().max(1.0);
            let residual = (n * f0 - target_khz).abs();
            T1Row {
                fundamental_khz: f0,
                harmonic: n as u64,
                predicted_mhz: n * f0 / 1e3,
                residual_khz: residual,
                matched: residual <= tol_khz,
            }
        })
        .collect();

    let mut unique: Vec<&T1Row> = Vec::new();
    for r in &rows {
        if !unique.iter().any(|u| (u.fundamental_khz - r.fundamental_khz).abs() < 1e-9) {
            unique.push(r);
        }
    }
    T1Report {
        target_mhz,
        tolerance_khz: tol_khz,
        observed_matches: rows.iter().filter(|r| r.matched).count(),
        expected_chance: expected(fundamentals_khz.iter().copied(), tol_khz),
        dedup_expected: expected(unique.iter().map(|r| r.fundamental_khz), tol_khz),
        dedup_observed: unique.iter().filter(|r| r.matched).count(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fundamentals() {
        let r = t1_harmonic_coincidence(&[36.66], 230.627441, 12.207);
        assert_eq!(r.rows[0].harmonic, 6291);
        assert!((r.rows[0].residual_khz - 0.619).abs() < 1e-3);
        assert!(r.rows[0].matched);

        let r = t1_harmonic_coincidence(&[50.0], 230.627441, 12.207);
        assert_eq!(r.rows[0].harmonic, 4613);
        assert!((r.rows[0].residual_khz - 22.559).abs() < 1e-3);
        assert!(!r.rows[0].matched);
    }

    #[test]
    fn huge_fundamental_uses_first_harmonic() {
        let r = t1_harmonic_coincidence(&[1e9], 230.0, 1.0);
        assert_eq!(r.rows[0].harmonic, 1);
        assert_eq!(r.expected_chance, 2.0 / 1e9);
    }
}
