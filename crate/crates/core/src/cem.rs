//! Cross-entropy method over a diagonal Gaussian.
//!
//! The [`Optimizer`] trait (propose candidates, report their scores) is the
//! only coupling between the learner and the environment, so another
//! derivative-free learner can be dropped in without touching `env`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Optimizer: Send {
    /// Propose the next population.
    fn ask(&mut self) -> Vec<Vec<f64>>;
    /// Report one score per proposed candidate (higher is better).
    fn tell(&mut self, candidates: &[Vec<f64>], scores: &[f64]) -> Result<EliteUpdate>;
    fn mean(&self) -> &[f64];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchDistribution {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EliteUpdate {
    pub distribution: SearchDistribution,
    /// Candidate indices, best first.
    pub elites: Vec<usize>,
    pub elite_mean_score: f64,
}

pub fn elite_count(population: usize, elite_fraction: f64) -> usize {
    ((elite_fraction * population as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Indices of the `k` best scores; ties go to the lower index and NaN ranks
/// as `-inf`.
pub fn select_elites(scores: &[f64], k: usize) -> Vec<usize> {
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Refit the search distribution to the elite candidates.
pub fn cem_iterate(
    candidates: &[Vec<f64>],
    scores: &[f64],
    elite_fraction: f64,
    std_floor: f64,
) -> Result<EliteUpdate> {
    if candidates.len() != scores.len() || candidates.is_empty() {
        return Err(Error::config(format!(
            "{} candidates but {} scores",
            candidates.len(),
            scores.len()
        )));
    }
    if scores.iter().all(|s| !(*s > f64::NEG_INFINITY)) {
        return Err(Error::AllCandidatesFailed {
            iteration: 0,
            diagnostics: format!("{} candidates, all faulted or non-finite", scores.len()),
        });
    }
    let elites = select_elites(scores, elite_count(scores.len(), elite_fraction));
    let dim = candidates[0].len();
    let n = elites.len() as f64;
    let mut mean = vec![0.0; dim];
    for &e in &elites {
        for (m, x) in mean.iter_mut().zip(&candidates[e]) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for &e in &elites {
        for ((v, x), m) in var.iter_mut().zip(&candidates[e]).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt().max(std_floor)).collect();
    let elite_mean_score = elites.iter().map(|&e| scores[e]).sum::<f64>() / n;
    Ok(EliteUpdate { distribution: SearchDistribution { mean, std }, elites, elite_mean_score })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CemSettings {
    pub population: usize,
    pub elite_fraction: f64,
    pub std_floor: f64,
}

pub struct Cem {
    dist: SearchDistribution,
    settings: CemSettings,
    rng: ChaCha8Rng,
    iteration: usize,
}

impl Cem {
    pub fn new(mean: Vec<f64>, init_std: f64, settings: CemSettings, rng: ChaCha8Rng) -> Self {
        let std = vec![init_std; mean.len()];
        Self { dist: SearchDistribution { mean, std }, settings, rng, iteration: 0 }
    }

    pub fn distribution(&self) -> &SearchDistribution {
        &self.dist
    }
}

impl Optimizer for Cem {
    fn ask(&mut self) -> Vec<Vec<f64>> {
        (0..self.settings.population)
            .map(|_| {
                self.dist
                    .mean
                    .iter()
                    .zip(&self.dist.std)
                    .map(|(m, s)| {
                        let z: f64 = self.rng.sample(StandardNormal);
                        m + s * z
                    })
                    .collect()
            })
            .collect()
    }

    fn tell(&mut self, candidates: &[Vec<f64>], scores: &[f64]) -> Result<EliteUpdate> {
        let update = cem_iterate(candidates, scores, self.settings.elite_fraction, self.settings.std_floor)
            .map_err(|e| match e {
                Error::AllCandidatesFailed { diagnostics, .. } => {
                    Error::AllCandidatesFailed { iteration: self.iteration, diagnostics }
                }
                other => other,
            })?;
        self.dist = update.distribution.clone();
        self.iteration += 1;
        Ok(update)
    }

    fn mean(&self) -> &[f64] {
        &self.dist.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn top_k_selection() {
        assert_eq!(select_elites(&[1.0, 3.0, 2.0, 0.0], 2), vec![1, 2]);
        assert_eq!(select_elites(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
        assert_eq!(select_elites(&[f64::NAN, 0.0, f64::NEG_INFINITY], 1), vec![1]);
        assert_eq!(elite_count(64, 0.125), 8);
        assert_eq!(elite_count(4, 0.5), 2);
        assert_eq!(elite_count(10, 0.125), 2);
    }

    #[test]
    fn update_uses_elites_only() {
        let c = vec![vec![0.0], vec![10.0], vec![4.0], vec![-3.0]];
        let u = cem_iterate(&c, &[1.0, 3.0, 2.0, 0.0], 0.5, 0.01).unwrap();
        assert_eq!(u.elites, vec![1, 2]);
        assert_eq!(u.distribution.mean, vec![7.0]);
        assert_eq!(u.distribution.std, vec![3.0]);
        assert_eq!(u.elite_mean_score, 2.5);
    }

    #[test]
    fn identical_population_collapses_to_floor() {
        let c = vec![vec![0.5, -1.0]; 8];
        let u = cem_iterate(&c, &[0.0; 8], 0.25, 0.01).unwrap();
        assert_eq!(u.distribution.mean, vec![0.5, -1.0]);
        assert_eq!(u.distribution.std, vec![0.01, 0.01]);
    }

    #[test]
    fn all_failed_aborts() {
        let c = vec![vec![0.0]; 4];
        let err = cem_iterate(&c, &[f64::NEG_INFINITY; 4], 0.5, 0.01).unwrap_err();
        assert!(matches!(err, Error::AllCandidatesFailed { .. }));
    }

    #[test]
    fn cem_ask_is_seeded() {
        let settings = CemSettings { population: 5, elite_fraction: 0.4, std_floor: 0.01 };
        let mut a = Cem::new(vec![0.0; 3], 1.0, settings, seed::rng_from(1, &[]));
        let mut b = Cem::new(vec![0.0; 3], 1.0, settings, seed::rng_from(1, &[]));
        assert_eq!(a.ask(), b.ask());
    }
}
