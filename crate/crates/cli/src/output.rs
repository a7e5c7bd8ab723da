//! CSV output with resume support, and the JSON sidecar.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Rows go to a file (flushed after each row) or to stdout.
pub struct RowSink<R> {
    writer: csv::Writer<Box<dyn Write>>,
    done: Vec<R>,
}

impl<R: Serialize + DeserializeOwned> RowSink<R> {
    /// With `resume`, rows already in `path` are kept and returned by
    /// [`RowSink::existing`]; otherwise the file is truncated.
    pub fn open(path: Option<&Path>, resume: bool) -> Result<Self> {
        let Some(path) = path else {
            let writer = csv::WriterBuilder::new().from_writer(Box::new(std::io::stdout()) as Box<dyn Write>);
            return Ok(Self { writer, done: Vec::new() });
        };
        let done: Vec<R> = if resume && path.exists() {
            csv::Reader::from_path(path)
                .with_context(|| format!("reading {}", path.display()))?
                .deserialize()
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("{} does not match the expected columns", path.display()))?
        } else {
            Vec::new()
        };
        let append = resume && path.exists() && std::fs::metadata(path)?.len() > 0;
        let file: File = if append {
            OpenOptions::new().append(true).open(path)?
        } else {
            File::create(path).with_context(|| format!("creating {}", path.display()))?
        };
        let writer = csv::WriterBuilder::new().has_headers(!append).from_writer(Box::new(file) as Box<dyn Write>);
        Ok(Self { writer, done })
    }

    pub fn existing(&self) -> &[R] {
        &self.done
    }

    pub fn write(&mut self, row: &R) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

/// `results.csv` → `results.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[derive(Serialize)]
pub struct Sidecar<'a, C: Serialize, E: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub threads: usize,
    pub wall_time_s: f64,
    pub rows_written: usize,
    pub rows_resumed: usize,
    pub extra: E,
}

pub fn write_sidecar<C: Serialize, E: Serialize>(csv: Option<&Path>, sidecar: &Sidecar<'_, C, E>) -> Result<()> {
    let Some(csv) = csv else { return Ok(()) };
    let path = sidecar_path(csv);
    let text = serde_json::to_string_pretty(sidecar)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
