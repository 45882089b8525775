//! Output assembly: deterministic documents, atomic writes.
//!
//! Both formats embed the artifact version and the fully resolved config,
//! and contain nothing run-dependent beyond the results themselves, so the
//! same config and seed reproduce the same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{CliError, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Binary64 round-trip formatting: 17 significant digits, '.' decimal.
pub fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

fn config_line(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("config serialization is infallible")
}

/// CSV document: `#` metadata lines, a column header, then data rows.
/// Extra sections (already line-formatted) may follow the main table.
pub fn csv_document(cfg: &RunConfig, columns: &str, rows: &[String], footer: &[String]) -> String {
    let mut doc = String::new();
    doc.push_str(&format!("# polylens {VERSION}\n"));
    doc.push_str(&format!("# config {}\n", config_line(cfg)));
    if !columns.is_empty() {
        doc.push_str(columns);
        doc.push('\n');
    }
    for row in rows {
        doc.push_str(row);
        doc.push('\n');
    }
    for line in footer {
        doc.push_str(line);
        doc.push('\n');
    }
    doc
}

/// JSON document: version + resolved config + command results.
pub fn json_document(cfg: &RunConfig, results: serde_json::Value) -> String {
    let doc = json!({
        "version": VERSION,
        "config": cfg,
        "results": results,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("document serialization");
    text.push('\n');
    text
}

/// Write to `path` atomically (sibling temp file, then rename), or to
/// stdout when no path is given.
pub fn write_output(out: &Option<PathBuf>, doc: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{doc}");
            Ok(())
        }
        Some(path) => {
            let tmp = sibling_tmp(path);
            fs::write(&tmp, doc).map_err(|e| {
                CliError::config(format!("cannot write {}: {e}", tmp.display()))
            })?;
            fs::rename(&tmp, path).map_err(|e| {
                CliError::config(format!("cannot finalize {}: {e}", path.display()))
            })
        }
    }
}

fn sibling_tmp(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
