//! CSV export of sweep results.
//!
//! Long format: one row per (sweep point, series) pair, so downstream
//! tooling can pivot without knowing which series a sweep produced.
//! Floats carry 17 significant digits, enough to round-trip f64; every
//! row repeats the seed and tool version for provenance.

use std::fmt::Write as _;
use std::path::Path;

use crate::conditioning::SweepResult;
use crate::error::{Error, Result};

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Write `result` to `path` with columns
/// `parameter,value,series,condition_number,ratio,seed,version`.
/// The ratio cell is empty for series without a baseline comparison.
pub fn write_sweep_csv(result: &SweepResult, path: &Path, seed: u64) -> Result<()> {
    let n = result.values.len();
    for (name, col) in &result.condition_numbers {
        if col.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "series {name} has {} entries for {n} sweep values",
                col.len()
            )));
        }
    }
    for (name, col) in &result.ratios {
        if col.len() != n || !result.condition_numbers.contains_key(name) {
            return Err(Error::DimensionMismatch(format!(
                "ratio series {name} does not match its condition-number series"
            )));
        }
    }
    let mut out = String::new();
    out.push_str("parameter,value,series,condition_number,ratio,seed,version\n");
    for (i, value) in result.values.iter().enumerate() {
        for (name, col) in &result.condition_numbers {
            let ratio = result
                .ratios
                .get(name)
                .map(|r| fmt_f64(r[i]))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                result.parameter,
                fmt_f64(*value),
                name,
                fmt_f64(col[i]),
                ratio,
                seed,
                crate::VERSION
            )
            .expect("writing to a String cannot fail");
        }
    }
    super::atomic_write(path, out.as_bytes())
}
