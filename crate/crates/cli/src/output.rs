//! Output files: stable JSON/CSV artifacts plus the per-run manifest.
//!
//! Every file except the manifest is a pure function of `(config, seed)`:
//! floats print in shortest round-trip form, JSON fields follow struct
//! order, CSV rows follow input order.  Wall time and timestamps live only
//! in the manifest.

use crate::config::RunConfig;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> std::io::Result<OutDir> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)
    }

    pub fn write_text(&self, name: &str, text: &str) -> std::io::Result<()> {
        fs::write(self.path(name), text)
    }
}

/// Versioned CSV writer: a `#` comment header carrying the format id and
/// column list, then plain rows.
pub struct CsvWriter {
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(format_id: &str, columns: &[&str]) -> CsvWriter {
        let mut buf = String::new();
        buf.push_str(&format!(
            "# {format_id} v1, columns={}\n{}\n",
            columns.join("|"),
            columns.join(",")
        ));
        CsvWriter {
            buf,
            columns: columns.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "column count mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Run manifest: resolved config, seed, versions and timing.  The one file
/// that is allowed to differ between identical runs.
#[derive(Serialize)]
pub struct Manifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub rng: &'static str,
    pub resolved_config: RunConfig,
    pub wall_time_ms: f64,
    pub timestamp_unix_ms: u128,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, jobs: Option<usize>, config: &RunConfig) -> Manifest {
        Manifest {
            artifact: "dynkin",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            jobs,
            rng: "chacha8 counter-based, streams = replication index",
            resolved_config: config.clone(),
            wall_time_ms: 0.0,
            timestamp_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }
}

/// Writes stderr-style progress to the terminal without polluting stdout
/// (stdout carries machine-readable summaries).
pub fn note(msg: &str) {
    let _ = writeln!(std::io::stderr(), "{msg}");
}
