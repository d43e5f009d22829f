//! CSV, sidecar and manifest writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use irs_paoi::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// A CSV table held in memory until written.
pub struct Table {
    header: Vec<(&'static str, &'static str)>,
    body: String,
}

impl Table {
    /// `columns` pairs each column name with its unit.
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Table { header: columns.to_vec(), body: String::new() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.header.len());
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    fn render(&self) -> String {
        let names: Vec<&str> = self.header.iter().map(|c| c.0).collect();
        format!("{}\n{}", names.join(","), self.body)
    }
}

/// Formats an optional number, empty when absent.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

pub struct OutputDir {
    dir: PathBuf,
    written: Vec<OutputEntry>,
    pub warnings: Vec<String>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(OutputDir { dir: dir.to_path_buf(), written: Vec::new(), warnings: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        self.written.push(OutputEntry { path: name.into(), sha256: sha256_hex(content) });
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json` with the column units and
    /// any extra metadata.
    pub fn csv(&mut self, stem: &str, table: &Table, meta: Value) -> Result<()> {
        self.write(&format!("{stem}.csv"), table.render().as_bytes())?;
        let units: serde_json::Map<String, Value> = table.header.iter().map(|(n, u)| (n.to_string(), json!(u))).collect();
        let sidecar = json!({ "file": format!("{stem}.csv"), "units": units, "meta": meta });
        self.json(&format!("{stem}.meta.json"), &sidecar)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerics(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn manifest(self, fields: Value) -> Result<()> {
        let mut m = fields;
        m["outputs"] = serde_json::to_value(&self.written).map_err(|e| Error::Numerics(e.to_string()))?;
        m["warnings"] = json!(self.warnings);
        let path = self.dir.join("manifest.json");
        let s = serde_json::to_string_pretty(&m).map_err(|e| Error::Numerics(e.to_string()))? + "\n";
        fs::write(&path, s).map_err(|e| io_err(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn table_has_header_and_empty_optionals() {
        let mut t = Table::new(&[("t", "s"), ("v", "s")]);
        t.row(&["1".into(), opt(None)]);
        t.row(&["0.5".into(), opt(Some(2.5))]);
        assert_eq!(t.render(), "t,v\n1,\n0.5,2.5\n");
    }
}
