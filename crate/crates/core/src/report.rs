//! Plot-ready output files.
//!
//! Two formats, both byte-stable for identical inputs: CSV (fixed column
//! order, shortest round-trip float formatting) and JSON lines. Every file
//! starts with a metadata record carrying the artifact version, the seed,
//! and a hash of the generating configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" | "json-lines" => Ok(ReportFormat::Jsonl),
            other => Err(Error::domain(format!("unknown report format '{other}'"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Jsonl => "jsonl",
        }
    }
}

/// Provenance record written at the top of every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub tool: String,
    pub artifact_version: String,
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub config_hash: String,
}

impl ReportMeta {
    pub fn new(subcommand: &str, master_seed: Option<u64>, config: &impl Serialize) -> Result<Self> {
        Ok(ReportMeta {
            tool: "psocid".to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            master_seed,
            config_hash: config_hash(config)?,
        })
    }
}

/// SHA-256 of the canonical JSON encoding of a configuration.
pub fn config_hash(config: &impl Serialize) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| Error::Serialize(e.to_string()))?;
    Ok(sha256_hex(json.as_bytes()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Render rows as JSON lines, metadata record first.
pub fn render_jsonl<T: Serialize>(rows: &[T], meta: &ReportMeta) -> Result<String> {
    let mut out = String::new();
    let meta_line = serde_json::json!({ "meta": meta });
    out.push_str(&meta_line.to_string());
    out.push('\n');
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| Error::Serialize(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Render rows as CSV with an explicit header (so an empty result still
/// yields a header-only file). The metadata record rides in a leading `#`
/// comment line.
pub fn render_csv<T: Serialize>(rows: &[T], header: &[&str], meta: &ReportMeta) -> Result<String> {
    let meta_json =
        serde_json::to_string(meta).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut out = format!("# {meta_json}\n");
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    writer
        .write_record(header)
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Serialize(e.to_string()))?;
    }
    let body = writer
        .into_inner()
        .map_err(|e| Error::Serialize(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Serialize(e.to_string()))?);
    Ok(out)
}

/// An emitted file: path, content hash, size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// Write rows to `path` in the requested format and return the manifest
/// entry for the file.
pub fn emit_to_path<T: Serialize>(
    rows: &[T],
    header: &[&str],
    meta: &ReportMeta,
    format: ReportFormat,
    path: &Path,
) -> Result<ReportEntry> {
    let content = match format {
        ReportFormat::Csv => render_csv(rows, header, meta)?,
        ReportFormat::Jsonl => render_jsonl(rows, meta)?,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(content.as_bytes())?;
    Ok(ReportEntry {
        path: path.to_path_buf(),
        sha256: sha256_hex(content.as_bytes()),
        bytes: content.len() as u64,
    })
}
