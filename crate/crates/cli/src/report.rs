//! Report envelope: every invocation writes `{"manifest": …, "result": …}`
//! with stable key ordering, so reruns of the same manifest are
//! byte-identical apart from the timestamp.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub version: String,
    pub timestamp_unix_ms: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        dist: Option<PathBuf>,
        coeffs: Option<PathBuf>,
        seq: Option<PathBuf>,
        seed: u64,
        out: Option<PathBuf>,
    ) -> Self {
        let timestamp_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        RunManifest {
            command: command.to_string(),
            argv: std::env::args().skip(1).collect(),
            dist: dist.map(|p| p.display().to_string()),
            coeffs: coeffs.map(|p| p.display().to_string()),
            seq: seq.map(|p| p.display().to_string()),
            seed,
            out: out.map(|p| p.display().to_string()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix_ms,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    manifest: &'a RunManifest,
    result: &'a Value,
}

/// Sibling path for tabular companions: `report.json` → `report.csv`.
pub fn csv_companion_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Writes the JSON report to `out` (stdout when `None`) and the optional
/// CSV companion next to it.
pub fn write_report(
    manifest: &RunManifest,
    result: &Value,
    out: Option<&PathBuf>,
    csv: Option<&(PathBuf, String)>,
) -> anyhow::Result<()> {
    let report = Report { manifest, result };
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    match out {
        Some(path) => fs::write(path, body)
            .with_context(|| format!("cannot write report to {}", path.display()))?,
        None => print!("{body}"),
    }
    if let Some((path, data)) = csv {
        fs::write(path, data)
            .with_context(|| format!("cannot write CSV companion to {}", path.display()))?;
    }
    Ok(())
}
