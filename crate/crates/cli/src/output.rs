//! Output directory handling: lock file, artifacts, sidecar metadata.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use stopsum_core::report::{to_json, Table};

use crate::config::{RunConfig, SCHEMA};
use crate::plot::{emit_plot, PlotStyle};

const LOCK: &str = ".stopsum.lock";

/// Exclusive use of an output directory for one run.
pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<String>,
    plots: bool,
}

impl OutDir {
    pub fn open(root: &Path, plots: bool) -> Result<OutDir> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = root.join(LOCK);
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => anyhow!(
                    "{} is locked by another run (remove {} if that run is gone)",
                    root.display(),
                    lock.display()
                ),
                _ => anyhow!("creating {}: {e}", lock.display()),
            })?;
        writeln!(f, "{}", std::process::id())?;
        Ok(OutDir {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
            plots,
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.artifacts.push(name.to_string());
        Ok(p)
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let p = self.path(name)?;
        table.write_csv(&p)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name)?;
        fs::write(p, to_json(value)?)?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(p, body)?;
        Ok(())
    }

    /// Written only when plots were requested.
    pub fn plot(&mut self, name: &str, table: &Table, x: &str, y: &str, style: &PlotStyle) -> Result<()> {
        if !self.plots || table.is_empty() {
            return Ok(());
        }
        let p = self.path(name)?;
        emit_plot(table, x, y, style, &p)
    }

    /// Config, schema and the metadata sidecar. Only the sidecar carries
    /// a timestamp.
    pub fn finish(mut self, config: &RunConfig, verdict: &str) -> Result<()> {
        self.json("config.json", config)?;
        self.text("config.schema.json", SCHEMA)?;
        let meta = Metadata {
            tool: "stopsum",
            version: env!("CARGO_PKG_VERSION"),
            finished_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            verdict: verdict.to_string(),
            artifacts: self.artifacts.clone(),
        };
        fs::write(self.root.join("metadata.json"), to_json(&meta)?)?;
        Ok(())
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK));
    }
}

#[derive(Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    finished_unix_seconds: u64,
    verdict: String,
    artifacts: Vec<String>,
}
