#![allow(dead_code)]

use reachlab_harness::config::{desk_scale, parse_onto, HarnessConfig};

/// A grid small enough to train in well under a second per cell.
pub const TINY: &str = r#"
grid.variants = ["baseline"]
grid.requirements = ["pos"]
grid.p_tols = [0.105]
grid.seed = 11
optimizer.iterations = 2
optimizer.population = 6
optimizer.validation_episodes = 2
optimizer.episodes_per_candidate = 1
optimizer.policy.hidden = [4]
env.horizon = 40
evaluation.n_rollouts = 4
evaluation.save_trajectories = 2
"#;

pub fn tiny() -> HarnessConfig {
    parse_onto(&desk_scale(), TINY).unwrap()
}

/// [`TINY`] with some of its keys replaced or added.
pub fn tiny_text(extra: &str) -> String {
    let keys: Vec<&str> = extra.lines().filter_map(|l| l.split('=').next()).map(str::trim).collect();
    let mut text: String = TINY
        .lines()
        .filter(|l| !keys.contains(&l.split('=').next().unwrap_or("").trim()))
        .map(|l| format!("{l}\n"))
        .collect();
    text.push_str(extra);
    text.push('\n');
    text
}

pub fn tiny_with(extra: &str) -> HarnessConfig {
    parse_onto(&desk_scale(), &tiny_text(extra)).unwrap()
}
