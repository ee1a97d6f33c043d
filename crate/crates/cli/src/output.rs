use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// A CSV table rendered with `Display` floats, so identical values give identical bytes.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    /// Panics if the row width differs from the header: a programming error.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Comment line with the manifest hash, header, rows; LF endings.
    pub fn render(&self, manifest_hash: &str) -> String {
        let mut s = format!("# manifest {manifest_hash}\n");
        push_line(&mut s, &self.header);
        for r in &self.rows {
            push_line(&mut s, r);
        }
        s
    }
}

fn push_line(s: &mut String, fields: &[String]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&quote(f));
    }
    s.push('\n');
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn cell(x: impl Display) -> String {
    x.to_string()
}

pub fn opt_cell<T: Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Everything one command produces, written together after the computation.
#[derive(Debug, Default)]
pub struct Outputs {
    pub tables: Vec<(String, Table)>,
    pub json: Vec<(String, serde_json::Value)>,
    /// Set when every requested estimate came back censored.
    pub censored_only: Option<String>,
}

impl Outputs {
    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn json(&mut self, name: &str, v: impl Serialize) -> Result<(), CliError> {
        let v = serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))?;
        self.json.push((name.to_string(), v));
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    /// Hash of the inputs that determine the outputs; stamped into every CSV.
    pub manifest_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub version: String,
    pub wall_time_secs: f64,
    pub files: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Excludes thread count and wall time, which must not change CSV bytes.
pub fn manifest_hash(command: &str, config_hash: &str, seed: u64, version: &str) -> String {
    sha256_hex(format!("{command}\n{config_hash}\n{seed}\n{version}\n").as_bytes())
}

/// Writes all tables and JSON documents, then `manifest.json` last.
pub fn write_all(dir: &Path, outputs: &Outputs, mut manifest: RunManifest) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (name, t) in &outputs.tables {
        let file = format!("{name}.csv");
        fs::write(dir.join(&file), t.render(&manifest.manifest_hash))?;
        files.push(file);
    }
    for (name, v) in &outputs.json {
        let file = format!("{name}.json");
        let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(dir.join(&file), text)?;
        files.push(file);
    }
    manifest.files = files;
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
