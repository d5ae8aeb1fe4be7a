//! Run configuration.
//!
//! A config file is TOML restricted in practice to flat dotted keys, one
//! setting per line:
//!
//! ```text
//! env.noise.sigma1 = 0.103
//! env.requirement.kind = "pos-vel"
//! grid.variants = ["baseline", "hybrid"]
//! optimizer.iterations = 200
//! ```
//!
//! Keys not present keep their preset values (desk scale, or paper scale with
//! `--paper-scale`). Unknown keys are errors. [`to_flat_string`] writes the
//! fully resolved configuration back in the same format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use reachlab::env::{EnvConfig, EnvMode};
use reachlab::metrics::MetricsSettings;
use reachlab::train::OptimizerConfig;

use crate::error::{HarnessError, Result};
use crate::grid::GridSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub n_rollouts: usize,
    /// Rollouts per agent written to disk as trajectory files.
    pub save_trajectories: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { n_rollouts: 1000, save_trajectories: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub env: EnvConfig,
    pub optimizer: OptimizerConfig,
    pub metrics: MetricsSettings,
    pub grid: GridSpec,
    pub evaluation: EvaluationConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        desk_scale()
    }
}

/// Budgets sized for a workstation: the full 48-cell grid in hours.
pub fn desk_scale() -> HarnessConfig {
    HarnessConfig {
        env: EnvConfig::default(),
        optimizer: OptimizerConfig {
            init_std: 0.3,
            episodes_per_candidate: Some(8),
            iterations: 200,
            ..OptimizerConfig::default()
        },
        metrics: MetricsSettings::default(),
        grid: GridSpec::default(),
        evaluation: EvaluationConfig::default(),
    }
}

/// Larger budgets. The learner is still CEM, so this does not reproduce
/// results obtained with other learners.
pub fn paper_scale() -> HarnessConfig {
    let mut c = desk_scale();
    c.optimizer.iterations = 1000;
    c.optimizer.population = 128;
    c.optimizer.episodes_per_candidate = Some(16);
    c.optimizer.validation_episodes = 32;
    c
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: reachlab::Error| HarnessError::Config(e.to_string());
        self.env.validate().map_err(wrap)?;
        self.env.with_mode(EnvMode::Evaluation).validate().map_err(wrap)?;
        self.optimizer.validate().map_err(wrap)?;
        self.metrics.validate().map_err(wrap)?;
        self.grid.validate()?;
        for cell in self.grid.cells() {
            cell.env_config(&self.env).with_mode(EnvMode::Evaluation).validate().map_err(wrap)?;
        }
        if self.evaluation.n_rollouts == 0 {
            return Err(HarnessError::Config("evaluation.n_rollouts must be positive".into()));
        }
        Ok(())
    }
}

/// Recursively overlay `patch` onto `base`; objects merge key by key, every
/// other value replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Apply config text on top of a preset.
pub fn parse_onto(preset: &HarnessConfig, text: &str) -> Result<HarnessConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let patch = serde_json::to_value(&table).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut value = serde_json::to_value(preset).expect("config serializes");
    merge(&mut value, patch);
    let config: HarnessConfig =
        serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Resolve a configuration from an optional file over the chosen preset.
pub fn load(path: Option<&Path>, paper: bool) -> Result<HarnessConfig> {
    let preset = if paper { paper_scale() } else { desk_scale() };
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
            parse_onto(&preset, &text)
        }
        None => {
            preset.validate()?;
            Ok(preset)
        }
    }
}

fn inline(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|i| inline(i).unwrap_or_default()).collect();
            Some(format!("[{}]", parts.join(", ")))
        }
        Value::Object(map) => {
            let parts: Vec<String> =
                map.iter().filter_map(|(k, v)| inline(v).map(|s| format!("{k} = {s}"))).collect();
            Some(format!("{{ {} }}", parts.join(", ")))
        }
        other => Some(other.to_string()),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => {
            if let Some(s) = inline(other) {
                out.push(format!("{prefix} = {s}"));
            }
        }
    }
}

/// One `dotted.key = value` line per setting, keys sorted.
pub fn to_flat_string(config: &HarnessConfig) -> String {
    let mut lines = Vec::new();
    flatten("", &serde_json::to_value(config).expect("config serializes"), &mut lines);
    lines.sort();
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use reachlab::env::{ModelVariant, RequirementKind};

    #[test]
    fn flat_round_trip() {
        let mut c = desk_scale();
        c.env.noise.sigma1 = 0.2;
        c.grid.variants = vec![ModelVariant::Hybrid];
        let text = to_flat_string(&c);
        assert!(text.contains("env.noise.sigma1 = 0.2\n"));
        assert!(text.lines().all(|l| l.contains(" = ")));
        assert_eq!(parse_onto(&paper_scale(), &text).unwrap(), c);
    }

    #[test]
    fn dotted_keys_override_preset() {
        let c = parse_onto(
            &desk_scale(),
            "env.noise.sigma1 = 0.05\nenv.requirement.kind = \"pos-vel\"\noptimizer.iterations = 3\n",
        )
        .unwrap();
        assert_eq!(c.env.noise.sigma1, 0.05);
        assert_eq!(c.env.requirement.kind, RequirementKind::PosVel);
        assert_eq!(c.optimizer.iterations, 3);
        assert_eq!(c.optimizer.population, desk_scale().optimizer.population);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for text in ["env.nosie.sigma1 = 0.1", "env.noise.sigma1 = -1.0", "grid.variants = []", "a = = 1"] {
            let err = parse_onto(&desk_scale(), text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }
}
