//! CSV and manifest writers.
//!
//! Floats are written with 17 significant digits so every value round-trips
//! and file checksums are a faithful fingerprint of the results.

use std::fs;
use std::path::{Path, PathBuf};

use deloc::{EnsembleRecord, ShellProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SWEEP_HEADER: [&str; 8] = ["c", "realization", "y", "L", "gamma", "sse", "breakdown", "drift"];
pub const SUMMARY_HEADER: [&str; 5] = ["c", "min_y", "min_L", "argmin_y", "argmin_L"];
pub const ENERGY_HEADER: [&str; 3] = ["s", "energy", "cumulative_fraction"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `energy_<c>.csv`, with `c` in its shortest round-trip form.
pub fn energy_file_name(c: f64) -> String {
    format!("energy_{c:?}.csv")
}

pub fn write_sweep_csv(path: &Path, records: &[EnsembleRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_HEADER)?;
    for rec in records {
        for o in &rec.realizations {
            w.write_record([
                fmt_f64(rec.c),
                o.realization.to_string(),
                fmt_f64(o.y),
                fmt_f64(o.l),
                fmt_f64(o.gamma),
                fmt_f64(o.sse),
                fmt_opt(o.breakdown),
                fmt_f64(o.drift),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, records: &[EnsembleRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for rec in records {
        w.write_record([
            fmt_f64(rec.c),
            fmt_f64(rec.min_y),
            fmt_f64(rec.min_l),
            fmt_opt(rec.argmin_y),
            fmt_opt(rec.argmin_l),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-shell energy (stored units, see [`ShellProfile::log2_scale`]) and
/// the cumulative fraction of the total.
pub fn write_energy_csv(path: &Path, profile: &ShellProfile) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ENERGY_HEADER)?;
    for (s, (e, f)) in profile
        .shells
        .iter()
        .zip(profile.cumulative_fractions())
        .enumerate()
    {
        w.write_record([s.to_string(), fmt_f64(*e), fmt_f64(f)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub command: String,
    pub config: serde_json::Value,
    pub threads: usize,
    pub files: Vec<FileEntry>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, threads: usize) -> Self {
        Self {
            tool: "deloc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            command: command.into(),
            config,
            threads,
            files: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Records `path` (already written inside `dir`) with its checksum.
    pub fn add_file(&mut self, path: &Path) -> Result<&mut FileEntry, CliError> {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CliError::Io(format!("bad output path {}", path.display())))?
            .to_string();
        let sha256 = sha256_file(path)?;
        let bytes = fs::metadata(path)?.len();
        self.files.push(FileEntry {
            name,
            sha256,
            bytes,
            notes: serde_json::Map::new(),
        });
        Ok(self.files.last_mut().expect("just pushed"))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Recomputes every listed checksum; returns the names that mismatch.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>, CliError> {
        let mut bad = Vec::new();
        for f in &self.files {
            if sha256_file(&dir.join(&f.name))? != f.sha256 {
                bad.push(f.name.clone());
            }
        }
        Ok(bad)
    }
}
