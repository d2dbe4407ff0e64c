//! Utterance manifests: UTF-8 CSV with the header
//! `speaker,session,microphone,language,role,index,path,duration`.
//!
//! Relative audio paths are resolved against the manifest's directory.
//! The tuple (speaker, session, microphone, language, index) must be
//! unique, so train and test utterances of one condition use distinct
//! indices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use spkid_core::{ConditionKey, Role};

use crate::error::{Error, Result};

pub const HEADER: [&str; 8] = [
    "speaker",
    "session",
    "microphone",
    "language",
    "role",
    "index",
    "path",
    "duration",
];

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub key: ConditionKey,
    /// Absolute, or relative to the directory holding the manifest.
    pub path: PathBuf,
    pub duration_s: f64,
}

impl UtteranceRecord {
    pub fn resolved_path(&self, base: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base.join(&self.path)
        }
    }
}

type UniqueKey = (String, String, String, String, u32);

fn unique_key(key: &ConditionKey) -> UniqueKey {
    (
        key.speaker.clone(),
        key.session.clone(),
        key.microphone.clone(),
        key.language.clone(),
        key.index,
    )
}

/// Base directory for a manifest's relative paths.
pub fn base_dir(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Parses a manifest; when `check_files` is set every audio path must exist.
pub fn load_manifest(path: &Path, check_files: bool) -> Result<Vec<UtteranceRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = parse_manifest(path, &text)?;
    if check_files {
        let base = base_dir(path);
        for (n, r) in records.iter().enumerate() {
            let audio = r.resolved_path(&base);
            if !audio.is_file() {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    line: n as u64 + 2,
                    reason: format!("audio file {} not found", audio.display()),
                });
            }
        }
    }
    Ok(records)
}

/// Parses manifest text; `origin` only labels diagnostics.
pub fn parse_manifest(origin: &Path, text: &str) -> Result<Vec<UtteranceRecord>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let err = |line: u64, reason: String| Error::Manifest {
        path: origin.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(err(1, format!("header must be `{}`", HEADER.join(","))));
    }
    let mut seen: BTreeMap<UniqueKey, u64> = BTreeMap::new();
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let role: Role = field(4).parse().map_err(|e: spkid_core::Error| err(line, e.to_string()))?;
        let index: u32 = field(5)
            .parse()
            .map_err(|_| err(line, format!("index `{}` is not a non-negative integer", field(5))))?;
        let duration_s: f64 = field(7)
            .parse()
            .map_err(|_| err(line, format!("duration `{}` is not a number", field(7))))?;
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(err(line, format!("duration {duration_s} must be positive")));
        }
        if field(6).is_empty() {
            return Err(err(line, "empty path".into()));
        }
        let key = ConditionKey {
            speaker: field(0).to_string(),
            session: field(1).to_string(),
            microphone: field(2).to_string(),
            language: field(3).to_string(),
            role,
            index,
        };
        key.validate().map_err(|e| err(line, e.to_string()))?;
        if let Some(first) = seen.insert(unique_key(&key), line) {
            return Err(err(line, format!("duplicate key {key} (first seen on line {first})")));
        }
        out.push(UtteranceRecord {
            key,
            path: PathBuf::from(field(6)),
            duration_s,
        });
    }
    Ok(out)
}

/// Serializes records; paths are written as stored.
pub fn render_manifest(records: &[UtteranceRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Config(e.to_string());
    writer.write_record(HEADER).map_err(to_err)?;
    for r in records {
        writer
            .write_record([
                r.key.speaker.as_str(),
                r.key.session.as_str(),
                r.key.microphone.as_str(),
                r.key.language.as_str(),
                r.key.role.as_str(),
                &r.key.index.to_string(),
                &r.path.to_string_lossy(),
                &format_duration(r.duration_s),
            ])
            .map_err(to_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output of UTF-8 fields"))
}

/// Shortest representation that parses back to the same value.
fn format_duration(d: f64) -> String {
    format!("{d}")
}

pub fn write_manifest(path: &Path, records: &[UtteranceRecord]) -> Result<()> {
    std::fs::write(path, render_manifest(records)?).map_err(|e| Error::io(path, e))
}
