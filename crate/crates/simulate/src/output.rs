use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::error::Result;

/// Format a float as `%.12e` for CSV cells.
pub fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Buffered CSV writer with a fixed header.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out, columns: header.len() })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        writeln!(self.out, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Collects the run metadata emitted next to the CSV tables.
pub struct RunManifest {
    start: Instant,
    experiment: String,
    config: Value,
    outputs: Vec<String>,
    extra: serde_json::Map<String, Value>,
}

impl RunManifest {
    pub fn new(experiment: &str, config: Value) -> Self {
        RunManifest {
            start: Instant::now(),
            experiment: experiment.to_string(),
            config,
            outputs: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.extra.insert(key.to_string(), value);
    }

    pub fn write(self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let unix_time =
            SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = json!({
            "experiment": self.experiment,
            "driver_version": env!("CARGO_PKG_VERSION"),
            "unix_time": unix_time,
            "wall_time_s": self.start.elapsed().as_secs_f64(),
            "config": self.config,
            "outputs": self.outputs,
            "results": Value::Object(self.extra),
        });
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
        Ok(path)
    }
}

impl From<serde_json::Error> for crate::error::CliError {
    fn from(e: serde_json::Error) -> Self {
        crate::error::CliError::Config(e.to_string())
    }
}
