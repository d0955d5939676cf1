//! Output files: CSV with a `#` metadata block, JSON documents, and the run
//! manifest with a SHA-256 digest per file.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub config: RunConfig,
    pub config_digest: String,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one directory and remembers what it wrote.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
    started: DateTime<Utc>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), started: Utc::now() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<RunManifest> {
        let stamp = |t: DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
        let manifest = RunManifest {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            config_digest: config.digest()?,
            started_at: stamp(self.started),
            finished_at: stamp(Utc::now()),
            files: self.files.clone(),
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }
}

/// Checks every manifest entry against the file on disk; returns the paths
/// that are missing or differ.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let mut bad = Vec::new();
    for f in &manifest.files {
        match std::fs::read(dir.join(&f.path)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok(bad)
}

/// A table destined for CSV or JSON output.
#[derive(Debug, Clone)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { metadata: Vec::new(), header, rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.push((key.to_string(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// `# key: value` lines, one header line, then the rows.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    /// `{"metadata": {...}, "rows": [{column: value}, ...]}` with the values
    /// kept as the same decimal strings the CSV carries.
    pub fn to_json(&self) -> serde_json::Value {
        let meta: serde_json::Map<_, _> =
            self.metadata.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<_, _> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| (h.to_string(), serde_json::Value::String(v.clone())))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::json!({ "metadata": meta, "rows": rows })
    }
}

/// Reads back the data rows of a CSV written by [`Table::to_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let io = |e: csv::Error| Error::Io(e.to_string());
    let header = r.headers().map_err(io)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(io)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_metadata_then_header() {
        let mut t = Table::new(vec!["a", "b"]).meta("units", "radians");
        t.push(vec![fmt_f64(0.1), fmt_f64(f64::NEG_INFINITY)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "# units: radians\na,b\n0.1,-inf\n");
        assert_eq!(fmt_f64(-0.1 - 0.2).parse::<f64>().unwrap(), -0.1 - 0.2);
    }

    #[test]
    fn manifest_lists_and_verifies_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::create(dir.path()).unwrap();
        a.write("x.txt", b"hello").unwrap();
        let m = a.finish("test", &RunConfig::default()).unwrap();
        assert_eq!(m.files.len(), 1);
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("x.txt"), b"changed").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["x.txt".to_string()]);
    }
}
