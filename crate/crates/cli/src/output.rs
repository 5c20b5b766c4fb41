//! CSV, JSON and manifest writers.
//!
//! CSV files are UTF-8 with a header row and LF line endings. Numbers are
//! written in Rust's shortest round-trip form, so parsing a cell gives back
//! the exact `f64` that was written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Name of the manifest inside every run directory.
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest decimal that parses back to `x`.
pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> anyhow::Result<Self> {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        writer.write_record(header)?;
        Ok(CsvFile {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, cells: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(cells)
            .with_context(|| format!("cannot write {}", self.path.display()))
    }

    pub fn finish(mut self) -> anyhow::Result<PathBuf> {
        self.writer
            .flush()
            .with_context(|| format!("cannot write {}", self.path.display()))?;
        Ok(self.path)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<PathBuf> {
    let mut file = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(path.to_path_buf())
}

/// Provenance of one run: tool version, resolved configuration, seed,
/// timestamps and the files written next to it.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: &'static str,
    pub config: C,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
