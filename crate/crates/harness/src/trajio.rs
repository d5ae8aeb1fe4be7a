//! Trajectory files: a CSV with one row per control instant plus a JSON
//! sidecar holding the configuration and episode outcome.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bit-identical values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reachlab::env::EnvConfig;
use reachlab::trajectory::{Row, Trajectory, COLUMNS, N_COLUMNS};

use crate::error::{HarnessError, Result};

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub env: EnvConfig,
    pub seed: u64,
    pub goal: [f64; 2],
    pub movement_time: f64,
    pub steps: usize,
    pub success: bool,
    pub faulted: bool,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write `rows` as CSV with the standard header.
pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Artifact(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| HarnessError::Artifact(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, env: &EnvConfig) -> Result<()> {
    write_rows(path, &COLUMNS, traj.rows.iter().map(|r| r.to_vec()))?;
    let sidecar = Sidecar {
        schema_version: TRAJECTORY_SCHEMA_VERSION,
        env: env.clone(),
        seed: traj.seed,
        goal: traj.goal,
        movement_time: traj.movement_time,
        steps: traj.n_steps(),
        success: traj.success,
        faulted: traj.faulted,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(sidecar_path(path), json).map_err(|e| HarnessError::io(sidecar_path(path), e))
}

/// Read a CSV whose header must contain every name in `columns` (in any
/// order); returns rows in `columns` order.
pub fn read_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let err = |e: csv::Error| HarnessError::Artifact(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header = r.headers().map_err(err)?.clone();
    let mut index = Vec::with_capacity(columns.len());
    for name in columns {
        match header.iter().position(|h| h == *name) {
            Some(i) => index.push(i),
            None => {
                return Err(HarnessError::Artifact(format!(
                    "{}: missing column `{name}`",
                    path.display()
                )))
            }
        }
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(err)?;
        let row = index
            .iter()
            .zip(columns)
            .map(|(&i, name)| {
                let field = rec.get(i).unwrap_or("");
                field.parse::<f64>().map_err(|_| {
                    HarnessError::Artifact(format!(
                        "{}: row {}: column `{name}` is not a number: {field:?}",
                        path.display(),
                        line + 2
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_trajectory(path: &Path) -> Result<(Trajectory, Sidecar)> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| HarnessError::io(&side, e))?;
    let version: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Artifact(format!("{}: {e}", side.display())))?;
    match version.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == TRAJECTORY_SCHEMA_VERSION as u64 => {}
        other => {
            return Err(HarnessError::Artifact(format!(
                "{}: trajectory schema version {other:?}, expected {TRAJECTORY_SCHEMA_VERSION}",
                side.display()
            )))
        }
    }
    let sidecar: Sidecar =
        serde_json::from_value(version).map_err(|e| HarnessError::Artifact(format!("{}: {e}", side.display())))?;
    let rows = read_columns(path, &COLUMNS)?
        .into_iter()
        .map(|r| {
            let mut row: Row = [0.0; N_COLUMNS];
            row.copy_from_slice(&r);
            row
        })
        .collect();
    let traj = Trajectory {
        rows,
        goal: sidecar.goal,
        seed: sidecar.seed,
        success: sidecar.success,
        faulted: sidecar.faulted,
        movement_time: sidecar.movement_time,
    };
    Ok((traj, sidecar))
}
