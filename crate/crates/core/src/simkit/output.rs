//! CSV and JSON writers. CSV probabilities carry six significant digits;
//! JSON keeps full precision.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{ResultTable, SweepResult};
use crate::error::{Error, Result};

/// `v` rounded to six significant digits, without exponent for moderate
/// magnitudes.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=6).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Misalignment rows: `scenario, scheme, budget_db, p_miss, stderr, trials`.
pub fn results_csv(table: &ResultTable) -> Result<Vec<u8>> {
    csv_bytes(
        &["scenario", "scheme", "budget_db", "p_miss", "stderr", "trials"],
        table.rows.iter().map(|r| {
            vec![
                r.scenario.name().to_string(),
                r.scheme.clone(),
                format!("{}", r.budget_db),
                sig6(r.p_miss),
                sig6(r.stderr),
                r.trials.to_string(),
            ]
        }),
    )
}

/// Per-trial SE samples: `trial, scheme, rate`.
pub fn se_samples_csv(table: &ResultTable) -> Result<Vec<u8>> {
    csv_bytes(
        &["trial", "scheme", "rate"],
        table.se_samples.iter().map(|s| vec![s.trial.to_string(), s.scheme.clone(), sig6(s.rate)]),
    )
}

/// SE summaries: `scheme, mean_rate, outage, trials`.
pub fn se_summary_csv(table: &ResultTable) -> Result<Vec<u8>> {
    csv_bytes(
        &["scheme", "mean_rate", "outage", "trials"],
        table
            .se_summary
            .iter()
            .map(|s| vec![s.scheme.clone(), sig6(s.mean_rate), sig6(s.outage), s.trials.to_string()]),
    )
}

/// Sweep map: `k, alpha, budget_db, p_miss, stderr`.
pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    csv_bytes(
        &["k", "alpha", "budget_db", "p_miss", "stderr"],
        result.map.iter().map(|c| {
            vec![c.k.to_string(), format!("{}", c.alpha), format!("{}", c.budget_db), sig6(c.p_miss), sig6(c.stderr)]
        }),
    )
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes `bytes` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(0.0527123456), "0.0527123");
        assert_eq!(sig6(0.5), "0.500000");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(12.3456789), "12.3457");
        assert_eq!(sig6(1.23456789e-7), "1.23457e-7");
        assert_eq!(sig6(3.0e-5), "0.0000300000");
    }
}
