//! Dataset manifest: the CSV that carries labels, quality flags, and subject
//! ids for a directory of recordings.
//!
//! Expected layout, with a header row:
//!
//! ```text
//! record_id,path,label,quality,subject_id
//! a0001,wav/a0001.wav,normal,good,s001
//! ```
//!
//! `label` is `normal` or `abnormal`; `quality` is `good`, `poor`, or
//! `unknown`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{Label, PcgError, PcgRecording, Quality};

pub const MANIFEST_HEADER: [&str; 5] = ["record_id", "path", "label", "quality", "subject_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub record_id: String,
    pub path: String,
    pub label: Label,
    pub quality: Quality,
    pub subject_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, PcgError> {
        let bytes = fs::read(path)?;
        parse_manifest(&bytes)
    }
}

fn parse_label(raw: &str) -> Result<Label, PcgError> {
    match raw.trim() {
        "normal" => Ok(Label::Normal),
        "abnormal" => Ok(Label::Abnormal),
        other => Err(PcgError::Manifest(format!(
            "label must be 'normal' or 'abnormal', got '{other}'"
        ))),
    }
}

fn parse_quality(raw: &str) -> Result<Quality, PcgError> {
    match raw.trim() {
        "good" => Ok(Quality::Good),
        "poor" => Ok(Quality::Poor),
        "unknown" => Ok(Quality::Unknown),
        other => Err(PcgError::Manifest(format!(
            "quality must be 'good', 'poor', or 'unknown', got '{other}'"
        ))),
    }
}

/// Parses and validates manifest CSV bytes.
///
/// Duplicate record ids and unknown label/quality tokens are rejected.
pub fn parse_manifest(bytes: &[u8]) -> Result<DatasetManifest, PcgError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = reader
        .headers()
        .map_err(|e| PcgError::Manifest(format!("unreadable header: {e}")))?
        .clone();
    let actual: Vec<&str> = headers.iter().collect();
    if actual != MANIFEST_HEADER {
        return Err(PcgError::Manifest(format!(
            "header must be '{}', got '{}'",
            MANIFEST_HEADER.join(","),
            actual.join(",")
        )));
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PcgError::Manifest(format!("row {}: {e}", line + 2)))?;
        if record.len() != 5 {
            return Err(PcgError::Manifest(format!(
                "row {}: expected 5 fields, got {}",
                line + 2,
                record.len()
            )));
        }
        let record_id = record[0].to_string();
        if record_id.is_empty() {
            return Err(PcgError::Manifest(format!("row {}: empty record_id", line + 2)));
        }
        if !seen.insert(record_id.clone()) {
            return Err(PcgError::Manifest(format!(
                "duplicate record_id '{record_id}'"
            )));
        }
        entries.push(ManifestEntry {
            record_id,
            path: record[1].to_string(),
            label: parse_label(&record[2])?,
            quality: parse_quality(&record[3])?,
            subject_id: record[4].to_string(),
        });
    }
    Ok(DatasetManifest { entries })
}

/// Result of attaching manifest metadata to loaded recordings.
#[derive(Debug, Clone)]
pub struct JoinReport {
    /// Labeled recordings in manifest order.
    pub recordings: Vec<PcgRecording>,
    /// Recordings that had no manifest entry and were dropped.
    pub dropped: usize,
    /// Manifest entries with no loaded recording.
    pub missing: usize,
}

/// Joins loaded recordings against a manifest.
///
/// Output follows manifest order; recordings without an entry are dropped
/// and counted in the report.
pub fn join_manifest(
    recs: Vec<PcgRecording>,
    manifest: &DatasetManifest,
) -> Result<JoinReport, PcgError> {
    let mut ids = HashSet::new();
    for entry in &manifest.entries {
        if !ids.insert(entry.record_id.as_str()) {
            return Err(PcgError::Manifest(format!(
                "duplicate record_id '{}'",
                entry.record_id
            )));
        }
    }

    let total = recs.len();
    let mut by_id: HashMap<String, PcgRecording> =
        recs.into_iter().map(|r| (r.id.clone(), r)).collect();

    let mut recordings = Vec::with_capacity(manifest.entries.len());
    let mut missing = 0usize;
    for entry in &manifest.entries {
        match by_id.remove(&entry.record_id) {
            Some(mut rec) => {
                rec.label = entry.label;
                rec.quality = entry.quality;
                rec.subject_id = entry.subject_id.clone();
                recordings.push(rec);
            }
            None => missing += 1,
        }
    }
    let dropped = total - recordings.len();
    Ok(JoinReport {
        recordings,
        dropped,
        missing,
    })
}
