//! Model × requirement × tolerance grid.

use serde::{Deserialize, Serialize};

use reachlab::env::{index_of_difficulty, EnvConfig, ModelVariant, RequirementKind};
use reachlab::seed::derive_seed;

use crate::error::{HarnessError, Result};

/// Goal radii giving indices of difficulty 2 to 5 at D = 0.63 m.
pub const DEFAULT_P_TOLS: [f64; 4] = [0.105, 0.045, 0.021, 0.010161];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub variants: Vec<ModelVariant>,
    pub requirements: Vec<RequirementKind>,
    pub p_tols: Vec<f64>,
    /// Global seed; every cell derives its own seed from it.
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            variants: ModelVariant::ALL.to_vec(),
            requirements: RequirementKind::ALL.to_vec(),
            p_tols: DEFAULT_P_TOLS.to_vec(),
            seed: 0,
        }
    }
}

/// One grid cell: a training environment and its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: ModelVariant,
    pub requirement: RequirementKind,
    pub p_tol: f64,
    pub id: f64,
    pub seed: u64,
}

impl Cell {
    /// File-name-safe identifier, e.g. `hybrid_pos-vel-acc_id3`.
    pub fn key(&self) -> String {
        format!("{}_{}_{}", self.variant.label(), self.requirement.label(), id_label(self.id))
    }

    pub fn env_config(&self, base: &EnvConfig) -> EnvConfig {
        let mut env = base.clone();
        env.variant = self.variant;
        env.requirement.kind = self.requirement;
        env.goal.p_tol = self.p_tol;
        env
    }
}

/// `id2` for integral indices of difficulty, `id2.345` otherwise.
pub fn id_label(id: f64) -> String {
    if (id - id.round()).abs() < 0.01 {
        format!("id{}", id.round() as i64)
    } else {
        format!("id{id:.3}")
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() || self.requirements.is_empty() || self.p_tols.is_empty() {
            return Err(HarnessError::Config("grid axes must be non-empty".into()));
        }
        if self.p_tols.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(HarnessError::Config("grid.p_tols must be positive".into()));
        }
        let cells = self.cells();
        let mut keys: Vec<String> = cells.iter().map(Cell::key).collect();
        keys.sort();
        keys.dedup();
        if keys.len() != cells.len() {
            return Err(HarnessError::Config("grid axes contain duplicates".into()));
        }
        Ok(())
    }

    /// Cells in axis order. A cell's seed depends only on the global seed and
    /// its own coordinates, so a sub-grid trains the same agents as the full
    /// grid.
    pub fn cells(&self) -> Vec<Cell> {
        let distance = reachlab::env::GoalSpec::default().distance;
        let mut out = Vec::new();
        for &variant in &self.variants {
            for &requirement in &self.requirements {
                for &p_tol in &self.p_tols {
                    let vi = ModelVariant::ALL.iter().position(|v| *v == variant).unwrap() as u64;
                    let ri = RequirementKind::ALL.iter().position(|r| *r == requirement).unwrap() as u64;
                    out.push(Cell {
                        variant,
                        requirement,
                        p_tol,
                        id: index_of_difficulty(distance, p_tol).unwrap_or(f64::NAN),
                        seed: derive_seed(self.seed, &[vi, ri, p_tol.to_bits()]),
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_48_cells() {
        let cells = GridSpec::default().cells();
        assert_eq!(cells.len(), 48);
        let ids: Vec<String> = cells[..4].iter().map(Cell::key).collect();
        assert_eq!(ids, ["baseline_pos_id2", "baseline_pos_id3", "baseline_pos_id4", "baseline_pos_id5"]);
    }

    #[test]
    fn sub_grid_seeds_match_full_grid() {
        let full = GridSpec::default().cells();
        let sub = GridSpec {
            variants: vec![ModelVariant::Hybrid],
            requirements: vec![RequirementKind::PosVelAcc],
            p_tols: vec![0.021],
            seed: 0,
        };
        let cell = &sub.cells()[0];
        assert!(full.contains(cell));
        assert_eq!(cell.key(), "hybrid_pos-vel-acc_id4");
    }

    #[test]
    fn duplicate_axis_rejected() {
        let g = GridSpec { p_tols: vec![0.1, 0.1], ..Default::default() };
        assert!(g.validate().is_err());
    }
}
