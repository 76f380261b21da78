//! CSV tables, binary fields and the run manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use tfio::SampledField;

use crate::error::CliError;

/// Exact, locale-free rendering of a real number.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:e}")
    }
}

#[derive(Clone, Debug)]
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header, rows, then the `#manifest:` line.
    pub fn render(&self, manifest_line: &str) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        writeln!(out, "#manifest: {manifest_line}").unwrap();
        out
    }
}

pub enum Artifact {
    Table(Csv),
    Field(SampledField),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub operation: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config_sha256: String,
    /// The effective configuration; rerunning it reproduces every artifact.
    pub config: String,
    pub passed: bool,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<ArtifactRecord>,
}

/// Renders all artifacts, then writes them and `manifest.json` into `dir`.
pub fn write_all(
    dir: &Path,
    artifacts: &[(String, Artifact)],
    manifest_line: &str,
    mut manifest: Manifest,
) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    let mut rendered = Vec::with_capacity(artifacts.len());
    for (name, a) in artifacts {
        let bytes = match a {
            Artifact::Table(csv) => csv.render(manifest_line).into_bytes(),
            Artifact::Field(f) => {
                let mut buf = Vec::new();
                tfio::write_field(&mut buf, f)?;
                buf
            }
        };
        manifest.artifacts.push(ArtifactRecord { name: name.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
        rendered.push((name, bytes));
    }
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, bytes) in rendered {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(io(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, -1.5, 1e-300, 0.1, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.push(vec!["1".into(), "2".into()]);
        assert_eq!(c.render("x=1"), "a,b\n1,2\n#manifest: x=1\n");
    }
}
