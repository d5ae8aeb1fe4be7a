//! Policy training with a population-based optimizer.
//!
//! Each iteration proposes a population, scores every candidate by its mean
//! return over `K` episodes and feeds the scores back. All candidates of an
//! iteration share the same `K` episode seeds (common random numbers), so
//! they face the same goals and, for noisy variants, the same noise streams.
//! The distribution mean is also scored on a fixed validation set every
//! iteration; the best-scoring mean becomes the returned policy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cem::{Cem, CemSettings, Optimizer};
use crate::env::{EnvConfig, EnvMode};
use crate::error::{Error, Result};
use crate::policy::{run_episode_in, PolicyParams, PolicyShape};
use crate::env::ReachEnv;
use crate::seed;

pub const AGENT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub population: usize,
    pub elite_fraction: f64,
    pub init_std: f64,
    pub std_floor: f64,
    pub iterations: usize,
    /// Episodes per candidate; unset means 1 for deterministic variants and
    /// 3 for noisy ones.
    pub episodes_per_candidate: Option<usize>,
    /// Fixed episodes used to score the distribution mean.
    pub validation_episodes: usize,
    pub seed: u64,
    pub policy: PolicyShape,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 64,
            elite_fraction: 0.125,
            init_std: 0.1,
            std_floor: 0.01,
            iterations: 200,
            episodes_per_candidate: None,
            validation_episodes: 16,
            seed: 0,
            policy: PolicyShape::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::config("optimizer.population must be at least 4"));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 0.5) {
            return Err(Error::config("optimizer.elite_fraction must be in (0, 0.5]"));
        }
        if !(self.init_std > 0.0 && self.std_floor > 0.0) {
            return Err(Error::config("optimizer stds must be positive"));
        }
        if self.episodes_per_candidate == Some(0) || self.validation_episodes == 0 {
            return Err(Error::config("episode counts must be positive"));
        }
        if self.policy.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        Ok(())
    }

    pub fn episodes_for(&self, env: &EnvConfig) -> usize {
        self.episodes_per_candidate
            .unwrap_or(if env.variant.noise_enabled() { 3 } else { 1 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_return: f64,
    pub elite_return: f64,
    /// Running maximum of `elite_return`.
    pub best_elite_return: f64,
    pub validation_return: f64,
    pub validation_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedAgent {
    pub schema_version: u32,
    pub train_config: EnvConfig,
    pub eval_config: EnvConfig,
    pub optimizer: OptimizerConfig,
    /// Seeds from the outermost (e.g. a grid's global seed) down to the
    /// optimizer seed.
    pub seed_lineage: Vec<u64>,
    pub curve: Vec<IterationStats>,
    pub best_iteration: Option<usize>,
    /// False when no training or validation episode ever succeeded.
    pub reaching: bool,
    pub params: PolicyParams,
}

impl TrainedAgent {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("agent serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            schema_version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Artifact(format!("unreadable header: {e}")))?;
        if header.schema_version != AGENT_SCHEMA_VERSION {
            return Err(Error::Artifact(format!(
                "schema version {} (expected {AGENT_SCHEMA_VERSION})",
                header.schema_version
            )));
        }
        let agent: TrainedAgent =
            serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        PolicyParams::new(agent.params.shape.clone(), agent.params.values.clone())?;
        Ok(agent)
    }
}

struct EpisodeScore {
    mean_return: f64,
    successes: usize,
}

fn score(params: &PolicyParams, config: &EnvConfig, seeds: &[u64]) -> Result<EpisodeScore> {
    let mut env = ReachEnv::new(config.clone())?;
    let mut total = 0.0;
    let mut successes = 0;
    for &s in seeds {
        let r = run_episode_in(&mut env, params, s, false)?;
        total += r.episode_return;
        successes += r.success as usize;
    }
    Ok(EpisodeScore { mean_return: total / seeds.len() as f64, successes })
}

/// Train a policy on `env` (forced to training mode). Evaluation mode is
/// recorded in the returned agent for later use.
pub fn train(env: &EnvConfig, opt: &OptimizerConfig) -> Result<TrainedAgent> {
    train_with_progress(env, opt, |_| {})
}

pub fn train_with_progress(
    env: &EnvConfig,
    opt: &OptimizerConfig,
    mut progress: impl FnMut(&IterationStats),
) -> Result<TrainedAgent> {
    opt.validate()?;
    let train_config = env.with_mode(EnvMode::Training);
    let eval_config = env.with_mode(EnvMode::Evaluation);
    train_config.validate()?;
    eval_config.validate()?;

    let shape = opt.policy.clone();
    let settings = CemSettings {
        population: opt.population,
        elite_fraction: opt.elite_fraction,
        std_floor: opt.std_floor,
    };
    let mut cem = Cem::new(vec![0.0; shape.n_params()], opt.init_std, settings, seed::rng_from(opt.seed, &[0]));
    let k = opt.episodes_for(&train_config);
    let validation_seeds: Vec<u64> =
        (0..opt.validation_episodes as u64).map(|v| seed::derive_seed(opt.seed, &[2, v])).collect();

    let mut curve = Vec::with_capacity(opt.iterations);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut best_elite = f64::NEG_INFINITY;
    let mut reaching = false;

    for it in 0..opt.iterations {
        let seeds: Vec<u64> = (0..k as u64).map(|e| seed::derive_seed(opt.seed, &[1, it as u64, e])).collect();
        let candidates = cem.ask();
        let scored: Vec<EpisodeScore> = candidates
            .par_iter()
            .map(|c| score(&PolicyParams { shape: shape.clone(), values: c.clone() }, &train_config, &seeds))
            .collect::<Result<_>>()?;
        reaching |= scored.iter().any(|s| s.successes > 0);
        let scores: Vec<f64> = scored.iter().map(|s| s.mean_return).collect();
        let update = cem.tell(&candidates, &scores)?;

        let mean_params = PolicyParams { shape: shape.clone(), values: cem.mean().to_vec() };
        let validation = score(&mean_params, &train_config, &validation_seeds)?;
        reaching |= validation.successes > 0;
        if best.as_ref().is_none_or(|(b, _, _)| validation.mean_return > *b) {
            best = Some((validation.mean_return, it, mean_params.values.clone()));
        }
        best_elite = best_elite.max(update.elite_mean_score);
        let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
        let stats = IterationStats {
            iteration: it,
            mean_return: finite.iter().sum::<f64>() / finite.len().max(1) as f64,
            elite_return: update.elite_mean_score,
            best_elite_return: best_elite,
            validation_return: validation.mean_return,
            validation_success: validation.successes as f64 / validation_seeds.len() as f64,
        };
        log::debug!(
            "iter {it}: mean {:.2} elite {:.2} val {:.2} ({:.0}% reach)",
            stats.mean_return,
            stats.elite_return,
            stats.validation_return,
            100.0 * stats.validation_success
        );
        progress(&stats);
        curve.push(stats);
    }

    let (best_iteration, values) = match best {
        Some((_, it, v)) => (Some(it), v),
        None => (None, cem.mean().to_vec()),
    };
    if !reaching {
        log::warn!("training finished without a single successful episode");
    }
    Ok(TrainedAgent {
        schema_version: AGENT_SCHEMA_VERSION,
        train_config,
        eval_config,
        optimizer: opt.clone(),
        seed_lineage: vec![opt.seed],
        curve,
        best_iteration,
        reaching,
        params: PolicyParams::new(shape, values)?,
    })
}
