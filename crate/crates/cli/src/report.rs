//! Report envelope and file emission.
//!
//! Every command writes one JSON report with the fixed top-level keys
//! {field, domain, command, params, results, violations} (plus an optional
//! timestamp) and any CSV artifacts next to it. serde_json maps are
//! BTree-backed, so identical inputs serialize byte-identically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use beltrami_core::domain::Domain;

#[derive(Debug, Serialize)]
pub struct Report {
    pub field: String,
    pub domain: Domain,
    pub command: String,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub results: Value,
    pub violations: Vec<String>,
}

impl Report {
    pub fn new(
        field: &str,
        domain: Domain,
        command: &str,
        params: Value,
        with_timestamp: bool,
    ) -> Self {
        let timestamp = with_timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Report {
            field: field.to_string(),
            domain,
            command: command.to_string(),
            params,
            timestamp,
            results: json!({}),
            violations: Vec::new(),
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cli::emit_report: cannot create {dir:?}: {e}"))
}

/// Write the JSON report; returns the path written.
pub fn emit_json(dir: &Path, name: &str, report: &Report) -> Result<PathBuf, String> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{name}.json"));
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| format!("cli::emit_report: serialization failed: {e}"))?;
    fs::write(&path, body + "\n")
        .map_err(|e| format!("cli::emit_report: cannot write {path:?}: {e}"))?;
    Ok(path)
}

/// Write a CSV artifact with the exact header given.
pub fn emit_csv<I>(dir: &Path, name: &str, header: &str, rows: I) -> Result<PathBuf, String>
where
    I: IntoIterator<Item = String>,
{
    ensure_dir(dir)?;
    let path = dir.join(name);
    let file = fs::File::create(&path)
        .map_err(|e| format!("cli::emit_report: cannot create {path:?}: {e}"))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}").map_err(|e| format!("cli::emit_report: {e}"))?;
    for row in rows {
        writeln!(w, "{row}").map_err(|e| format!("cli::emit_report: {e}"))?;
    }
    w.flush().map_err(|e| format!("cli::emit_report: {e}"))?;
    Ok(path)
}
