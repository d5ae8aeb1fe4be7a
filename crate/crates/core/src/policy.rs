//! Feed-forward stimulation policy and episode rollouts.

use serde::{Deserialize, Serialize};

use crate::arm::N_MUSCLES;
use crate::env::{obs, EnvConfig, Observation, ReachEnv, RewardComponents, OBS_DIM};
use crate::error::{Error, Result};
use crate::trajectory::{self, Trajectory};

/// Fixed per-channel divisors applied to observations before the first
/// layer, so every input is O(1) for typical reaching motions.
pub fn observation_scale() -> [f64; OBS_DIM] {
    let mut s = [1.0; OBS_DIM];
    let mut set = |range: std::ops::Range<usize>, v: f64| s[range].iter_mut().for_each(|x| *x = v);
    set(obs::HAND_POS, 0.5);
    set(obs::HAND_VEL, 2.0);
    set(obs::HAND_ACC, 20.0);
    set(obs::JOINT_POS, 1.5);
    set(obs::JOINT_VEL, 5.0);
    set(obs::JOINT_ACC, 50.0);
    set(obs::JOINT_JERK, 5000.0);
    set(obs::ACTIVATION, 1.0);
    set(obs::FORCE, 300.0);
    set(obs::MUSCLE_LENGTH, 0.1);
    set(obs::MUSCLE_VELOCITY, 0.5);
    set(obs::GOAL, 0.5);
    s[obs::WORK] = 20.0;
    s[obs::HAND_JERK] = 1000.0;
    s
}

/// Layer widths of a tanh MLP with a logistic output layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyShape {
    pub hidden: Vec<usize>,
}

impl Default for PolicyShape {
    fn default() -> Self {
        Self { hidden: vec![64, 64] }
    }
}

impl PolicyShape {
    fn layers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let widths: Vec<usize> = std::iter::once(OBS_DIM)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(N_MUSCLES))
            .collect();
        (0..widths.len() - 1).map(move |i| (widths[i], widths[i + 1]))
    }

    /// Total parameter count: weights (row-major, output-major) then biases,
    /// layer by layer.
    pub fn n_params(&self) -> usize {
        self.layers().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub shape: PolicyShape,
    pub values: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(shape: PolicyShape) -> Self {
        let n = shape.n_params();
        Self { shape, values: vec![0.0; n] }
    }

    pub fn new(shape: PolicyShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.n_params() {
            return Err(Error::config(format!(
                "policy expects {} parameters, got {}",
                shape.n_params(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("policy parameters must be finite"));
        }
        Ok(Self { shape, values })
    }
}

/// Evaluates a policy; owns scratch buffers so repeated calls do not
/// allocate.
pub struct PolicyRunner<'a> {
    params: &'a PolicyParams,
    scale: [f64; OBS_DIM],
    buf_in: Vec<f64>,
    buf_out: Vec<f64>,
}

impl<'a> PolicyRunner<'a> {
    pub fn new(params: &'a PolicyParams) -> Self {
        let widest = params.shape.hidden.iter().copied().chain([OBS_DIM, N_MUSCLES]).max().unwrap();
        Self {
            params,
            scale: observation_scale(),
            buf_in: Vec::with_capacity(widest),
            buf_out: Vec::with_capacity(widest),
        }
    }

    pub fn forward(&mut self, observation: &Observation) -> Result<[f64; N_MUSCLES]> {
        if observation.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "observation", t: f64::NAN });
        }
        self.buf_in.clear();
        self.buf_in.extend(observation.0.iter().zip(&self.scale).map(|(o, s)| o / s));
        let values = &self.params.values;
        let n_layers = self.params.shape.hidden.len() + 1;
        let mut offset = 0;
        for (layer, (n_in, n_out)) in self.params.shape.layers().enumerate() {
            let weights = &values[offset..offset + n_in * n_out];
            let biases = &values[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            self.buf_out.clear();
            for (row, b) in weights.chunks_exact(n_in).zip(biases) {
                let z = b + row.iter().zip(&self.buf_in).map(|(w, x)| w * x).sum::<f64>();
                self.buf_out.push(if layer + 1 < n_layers { z.tanh() } else { logistic(z) });
            }
            std::mem::swap(&mut self.buf_in, &mut self.buf_out);
        }
        let mut u = [0.0; N_MUSCLES];
        u.copy_from_slice(&self.buf_in);
        Ok(u)
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn policy_forward(params: &PolicyParams, observation: &Observation) -> Result<[f64; N_MUSCLES]> {
    PolicyRunner::new(params).forward(observation)
}

/// Outcome of one episode.
#[derive(Clone, Debug)]
pub struct Rollout {
    /// Present when recording was requested.
    pub trajectory: Option<Trajectory>,
    /// Sum of per-step total rewards; `-inf` for a faulted episode.
    pub episode_return: f64,
    pub success: bool,
    pub steps: usize,
    pub faulted: bool,
}

/// Run one episode from reset until success, horizon or fault.
pub fn run_episode(params: &PolicyParams, config: &EnvConfig, seed: u64, record: bool) -> Result<Rollout> {
    let mut env = ReachEnv::new(config.clone())?;
    run_episode_in(&mut env, params, seed, record)
}

pub(crate) fn run_episode_in(
    env: &mut ReachEnv,
    params: &PolicyParams,
    seed: u64,
    record: bool,
) -> Result<Rollout> {
    let mut runner = PolicyRunner::new(params);
    let mut observation = env.reset(seed)?;
    let mut rows = Vec::new();
    if record {
        rows.reserve(env.config().horizon + 1);
        rows.push(trajectory::make_row(
            env.state(),
            env.hand(),
            &[0.0; N_MUSCLES],
            &RewardComponents::default(),
        ));
    }
    let mut total = 0.0;
    let (success, faulted) = loop {
        let u = runner.forward(&observation)?;
        let step = env.step(&u)?;
        total += step.rewards.r_total;
        if record {
            rows.push(trajectory::make_row(env.state(), env.hand(), &step.info.applied, &step.rewards));
        }
        observation = step.observation;
        if step.done {
            break (step.rewards.r_sparse == 0.0 && !step.info.fault, step.info.fault);
        }
    };
    let steps = env.steps();
    let movement_time = steps as f64 * env.config().control_dt();
    let trajectory = record.then(|| Trajectory {
        rows,
        goal: env.goal(),
        seed,
        success,
        faulted,
        movement_time,
    });
    Ok(Rollout {
        trajectory,
        episode_return: if faulted { f64::NEG_INFINITY } else { total },
        success,
        steps,
        faulted,
    })
}

/// Recorded episode and its return.
pub fn rollout(params: &PolicyParams, config: &EnvConfig, seed: u64) -> Result<(Trajectory, f64)> {
    let r = run_episode(params, config, seed, true)?;
    Ok((r.trajectory.expect("recorded"), r.episode_return))
}
