//! File formats: the record CSV stream, plain-text snapshots, and JSON
//! summaries. All outputs are deterministic byte-for-byte for a given run.

use std::fs;
use std::path::Path;

use serde::Serialize;

use slabkin_core::diagnostics::{DiagnosticsRecord, CSV_HEADER};

use crate::error::{CliError, Result};

/// Serialize a record series with its header line.
pub fn records_to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 220 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

/// Parse a record CSV produced by [`records_to_csv`].
pub fn records_from_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty CSV".to_string()))?;
    if header.trim() != CSV_HEADER {
        return Err(CliError::Config(format!("unexpected CSV header: {header}")));
    }
    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        records.push(DiagnosticsRecord::from_csv_row(line)?);
    }
    Ok(records)
}

/// Extract one named column as a time series.
pub fn csv_series(records: &[DiagnosticsRecord], column: &str) -> Result<Vec<(f64, f64)>> {
    let pick: fn(&DiagnosticsRecord) -> f64 = match column {
        "norm_f_minus_Mc" => |r| r.norm_f_minus_mc,
        "norm_fperp" => |r| r.norm_fperp,
        "mass" => |r| r.mass,
        "boundary_dissipation" => |r| r.boundary_dissipation,
        "A_quantity" => |r| r.a_quantity,
        "entropy_E" => |r| r.entropy_e,
        "int_fperp2" => |r| r.int_fperp2,
        "int_boundary" => |r| r.int_boundary,
        other => {
            return Err(CliError::Config(format!(
                "unknown CSV column '{other}' (see header: {CSV_HEADER})"
            )))
        }
    };
    Ok(records.iter().map(|r| (r.t, pick(r))).collect())
}

pub fn snapshot_file_name(index: usize) -> String {
    format!("snapshot_{index:04}.txt")
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("summary not serializable: {e}")))?;
    text.push('\n');
    Ok(text)
}
