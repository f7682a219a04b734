//! CSV and run-manifest writers.
//!
//! All numeric CSV cells use Rust's shortest-roundtrip scientific notation
//! (`{:e}`), which is locale-independent and byte-stable for identical runs.
//! Every result file gets a `<name>.manifest.json` sidecar written
//! atomically (temp file + rename), recording the resolved configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub fn fmt_float(x: f64) -> String {
    format!("{x:e}")
}

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            buf: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn write(self, path: &Path) -> Result<()> {
        atomic_write(path, self.buf.as_bytes())
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub argv: Vec<String>,
    pub config: C,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<PathBuf>,
}

pub struct ManifestWriter {
    command: String,
    started: chrono::DateTime<chrono::Utc>,
}

impl ManifestWriter {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            started: chrono::Utc::now(),
        }
    }

    pub fn finish<C: Serialize>(
        self,
        config: &C,
        seed: Option<u64>,
        outputs: &[PathBuf],
    ) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_utc: self.started.to_rfc3339(),
            finished_utc: chrono::Utc::now().to_rfc3339(),
            outputs: outputs.to_vec(),
        };
        let primary = outputs.first().expect("at least one output");
        let path = manifest_path(primary);
        let json = serde_json::to_vec_pretty(&manifest)?;
        atomic_write(&path, &json)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
