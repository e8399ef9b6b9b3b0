//! Run directories: CSV tables, SVG figures and the TOML manifest.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::lab::svg::Chart;

/// Git-style content hash: SHA-256 of `"blob <len>\0" ++ bytes`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Fixed float format for tables: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects the files of one run directory and their hashes.
#[derive(Debug)]
pub struct OutputSink {
    dir: PathBuf,
    csv: bool,
    svg: bool,
    files: Vec<(String, String)>,
}

impl OutputSink {
    pub fn create(dir: &Path, formats: &[String]) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv: formats.iter().any(|f| f == "csv"),
            svg: formats.iter().any(|f| f == "svg"),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        let hash = blob_hash(content.as_bytes());
        match self.files.iter_mut().find(|(n, _)| n == name) {
            Some(entry) => entry.1 = hash,
            None => self.files.push((name.to_string(), hash)),
        }
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        if !self.csv {
            return Ok(());
        }
        let mut text = String::with_capacity(64 * (rows.len() + 1));
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn svg(&mut self, name: &str, chart: &Chart) -> Result<()> {
        if !self.svg {
            return Ok(());
        }
        self.write(name, &chart.render())
    }

    /// Writes `manifest.toml` last; it lists every other file with its hash.
    pub fn manifest(&mut self, mut table: toml::Table) -> Result<()> {
        let mut outputs = toml::Table::new();
        for (name, hash) in &self.files {
            outputs.insert(name.clone(), toml::Value::String(hash.clone()));
        }
        table.insert("outputs".into(), toml::Value::Table(outputs));
        let text = toml::to_string(&table).expect("manifest serializes");
        fs::write(self.dir.join("manifest.toml"), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git() {
        // `git hash-object --object-format=sha256` of an empty file
        assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn sink_respects_formats() {
        let tmp = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::create(tmp.path(), &["csv".to_string()]).unwrap();
        sink.csv("a.csv", "x", &["1".into()]).unwrap();
        let chart = Chart {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            x_scale: crate::lab::svg::Scale::Linear,
            y_scale: crate::lab::svg::Scale::Linear,
            series: vec![],
        };
        sink.svg("a.svg", &chart).unwrap();
        sink.manifest(toml::Table::new()).unwrap();
        assert!(tmp.path().join("a.csv").exists() && !tmp.path().join("a.svg").exists());
        let manifest: toml::Table = fs::read_to_string(tmp.path().join("manifest.toml")).unwrap().parse().unwrap();
        assert_eq!(manifest["outputs"]["a.csv"].as_str().unwrap(), blob_hash(b"x\n1\n"));
    }
}
