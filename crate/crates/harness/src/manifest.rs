//! Run directory bookkeeping.
//!
//! `manifest.json` records the resolved configuration, per-cell status and
//! every file written under the run directory. Entries are only ever added or
//! updated, never removed. Wall-clock times go to `timings.json` so that the
//! manifest itself is reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::HarnessConfig;
use crate::error::{HarnessError, Result};
use crate::grid::Cell;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const TIMINGS_FILE: &str = "timings.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Trained,
    /// Training finished without a single successful episode.
    NonReaching,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: Cell,
    pub status: CellStatus,
    pub agent: Option<String>,
    pub best_iteration: Option<usize>,
    pub error: Option<String>,
    pub metrics: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaVersions {
    pub manifest: u32,
    pub agent: u32,
    pub metrics: u32,
    pub trajectory: u32,
}

impl Default for SchemaVersions {
    fn default() -> Self {
        Self {
            manifest: MANIFEST_SCHEMA_VERSION,
            agent: reachlab::train::AGENT_SCHEMA_VERSION,
            metrics: reachlab::metrics::REPORT_SCHEMA_VERSION,
            trajectory: crate::trajio::TRAJECTORY_SCHEMA_VERSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schemas: SchemaVersions,
    pub code_version: String,
    pub config: HarnessConfig,
    pub cells: BTreeMap<String, CellRecord>,
    /// Paths relative to the run directory, `/`-separated.
    pub artifacts: BTreeSet<String>,
}

impl Manifest {
    pub fn new(config: HarnessConfig) -> Self {
        Self {
            schemas: SchemaVersions::default(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            cells: BTreeMap::new(),
            artifacts: BTreeSet::new(),
        }
    }
}

/// A run directory and its manifest.
pub struct RunDir {
    pub root: PathBuf,
    pub manifest: Manifest,
    timings: BTreeMap<String, f64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Artifact(format!("{}: {e}", path.display())))
}

/// Write through a temporary file and rename, so readers never see a torn
/// file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

impl RunDir {
    pub fn exists(root: &Path) -> bool {
        root.join(MANIFEST_FILE).is_file()
    }

    pub fn open(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(HarnessError::Artifact(format!("{}: no run manifest", root.display())));
        }
        let manifest: Manifest = read_json(&path)?;
        if manifest.schemas.manifest != MANIFEST_SCHEMA_VERSION {
            return Err(HarnessError::Artifact(format!(
                "{}: manifest schema {} (expected {MANIFEST_SCHEMA_VERSION})",
                path.display(),
                manifest.schemas.manifest
            )));
        }
        let timings_path = root.join(TIMINGS_FILE);
        let timings = if timings_path.is_file() { read_json(&timings_path)? } else { BTreeMap::new() };
        Ok(Self { root: root.to_path_buf(), manifest, timings })
    }

    /// Open an existing run directory created with the same configuration,
    /// or start a new one.
    pub fn open_or_create(root: &Path, config: &HarnessConfig) -> Result<Self> {
        if Self::exists(root) {
            let run = Self::open(root)?;
            if run.manifest.config != *config {
                return Err(HarnessError::Config(format!(
                    "{} was created with a different configuration; use a new --out directory",
                    root.display()
                )));
            }
            return Ok(run);
        }
        std::fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
        let mut run = Self { root: root.to_path_buf(), manifest: Manifest::new(config.clone()), timings: BTreeMap::new() };
        run.write(CONFIG_FILE, crate::config::to_flat_string(config).as_bytes())?;
        run.save()?;
        Ok(run)
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Record a file already written under the run directory.
    pub fn register(&mut self, rel: &str) {
        self.manifest.artifacts.insert(rel.to_string());
    }

    pub fn write(&mut self, rel: &str, contents: &[u8]) -> Result<()> {
        write_atomic(&self.path(rel), contents)?;
        self.register(rel);
        Ok(())
    }

    pub fn record_time(&mut self, key: &str, seconds: f64) {
        self.timings.insert(key.to_string(), seconds);
    }

    pub fn timing(&self, key: &str) -> Option<f64> {
        self.timings.get(key).copied()
    }

    pub fn save(&mut self) -> Result<()> {
        if !self.timings.is_empty() {
            let json = serde_json::to_string_pretty(&self.timings).expect("timings serialize");
            self.write(TIMINGS_FILE, json.as_bytes())?;
        }
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&self.path(MANIFEST_FILE), json.as_bytes())
    }

    /// Files on disk missing from the manifest, and manifest entries missing
    /// on disk.
    pub fn completeness(&self) -> Result<(Vec<String>, Vec<String>)> {
        let mut on_disk = BTreeSet::new();
        walk(&self.root, &self.root, &mut on_disk)?;
        on_disk.remove(MANIFEST_FILE);
        let unlisted = on_disk.difference(&self.manifest.artifacts).cloned().collect();
        let missing = self.manifest.artifacts.difference(&on_disk).cloned().collect();
        Ok((unlisted, missing))
    }
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeSet<String>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let entry = entry.map_err(|e| HarnessError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            walk(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("under root");
            let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            out.insert(parts.join("/"));
        }
    }
    Ok(())
}
