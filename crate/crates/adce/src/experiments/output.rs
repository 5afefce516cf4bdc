//! Deterministic CSV, JSON-metadata and gnuplot-script emission.
//!
//! Identical configurations must yield byte-identical CSVs: floats are
//! written in Rust's shortest round-trip form, rows in fixed grid order,
//! columns in fixed declaration order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::observables::TimeSeries;

/// Shortest round-trip decimal; `nan` for undefined points (gnuplot skips
/// them).
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Write one CSV with a `name[unit]`-style header row.
pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Dump a time series as CSV, one row per sample.
pub fn series_to_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut header = vec![format!("t[{}]", series.time_unit)];
    for c in &series.columns {
        header.push(c.name.clone());
    }
    let rows = (0..series.times.len()).map(|i| {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt_float(series.times[i]));
        for c in &series.columns {
            row.push(fmt_float(c.values[i]));
        }
        row
    });
    write_csv(path, &header, rows)
}

/// Content hash of the resolved configuration.
pub fn config_hash(resolved: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(resolved).expect("serializable config");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    format!("{:x}", hasher.finalize())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// Companion gnuplot script plotting every data column of a CSV against the
/// first column; validity/flag columns are skipped.
pub fn write_gnuplot(path: &Path, csv_name: &str, title: &str, header: &[String]) -> Result<()> {
    let mut s = String::new();
    s.push_str("set datafile separator comma\n");
    s.push_str("set key outside\n");
    s.push_str(&format!("set title \"{title}\"\n"));
    s.push_str(&format!("set xlabel \"{}\"\n", header[0]));
    let mut terms = Vec::new();
    for (i, name) in header.iter().enumerate().skip(1) {
        if name.starts_with("valid") || name.starts_with("flag") || name.starts_with("tone") {
            continue;
        }
        terms.push(format!(
            "'{csv_name}' using 1:{} with lines title \"{name}\"",
            i + 1
        ));
    }
    s.push_str(&format!("plot {}\n", terms.join(", \\\n     ")));
    s.push_str("pause -1\n");
    fs::write(path, s)?;
    Ok(())
}

/// Files and metadata produced by one scenario run.
#[derive(Debug)]
pub struct ResultBundle {
    pub files: Vec<PathBuf>,
    pub metadata: serde_json::Value,
}
