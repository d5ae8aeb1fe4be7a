//! Episodic point-to-point reaching environment.
//!
//! A control step holds one stimulation vector for `substeps` plant steps
//! (5 x 2 ms by default). Execution noise, when the model variant enables it,
//! corrupts the command once per control step as `u_f = (1 + eta1) u + eta2`
//! before clamping to [0, 1]. The per-step reward is
//! `c1 * r_sparse - c2 * r_optimal`, where `r_sparse` is 0 inside the goal
//! with the task requirement satisfied and -1 otherwise, and `r_optimal` is
//! the weighted mean of normalized effort, hand jerk and joint power.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arm::{self, ArmParams, ArmState, HandState, N_MUSCLES};
use crate::error::{Error, Result};
use crate::seed;

pub const OBS_DIM: usize = 42;

/// Index map of [`Observation`].
pub mod obs {
    use std::ops::Range;
    pub const HAND_POS: Range<usize> = 0..2;
    pub const HAND_VEL: Range<usize> = 2..4;
    pub const HAND_ACC: Range<usize> = 4..6;
    pub const JOINT_POS: Range<usize> = 6..8;
    pub const JOINT_VEL: Range<usize> = 8..10;
    pub const JOINT_ACC: Range<usize> = 10..12;
    pub const JOINT_JERK: Range<usize> = 12..14;
    pub const ACTIVATION: Range<usize> = 14..20;
    pub const FORCE: Range<usize> = 20..26;
    pub const MUSCLE_LENGTH: Range<usize> = 26..32;
    pub const MUSCLE_VELOCITY: Range<usize> = 32..38;
    pub const WORK: usize = 38;
    pub const HAND_JERK: usize = 39;
    pub const GOAL: Range<usize> = 40..42;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    Baseline,
    ExecutionNoise,
    OptimalityPrinciples,
    Hybrid,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Baseline,
        ModelVariant::ExecutionNoise,
        ModelVariant::OptimalityPrinciples,
        ModelVariant::Hybrid,
    ];

    pub fn noise_enabled(self) -> bool {
        matches!(self, ModelVariant::ExecutionNoise | ModelVariant::Hybrid)
    }

    pub fn optimality_enabled(self) -> bool {
        matches!(self, ModelVariant::OptimalityPrinciples | ModelVariant::Hybrid)
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelVariant::Baseline => "baseline",
            ModelVariant::ExecutionNoise => "execution-noise",
            ModelVariant::OptimalityPrinciples => "optimality-principles",
            ModelVariant::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.label() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequirementKind {
    Pos,
    PosVel,
    PosVelAcc,
}

impl RequirementKind {
    pub const ALL: [RequirementKind; 3] =
        [RequirementKind::Pos, RequirementKind::PosVel, RequirementKind::PosVelAcc];

    pub fn label(self) -> &'static str {
        match self {
            RequirementKind::Pos => "pos",
            RequirementKind::PosVel => "pos-vel",
            RequirementKind::PosVelAcc => "pos-vel-acc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.label() == s)
    }
}

/// Terminal kinematic predicate that must hold inside the goal region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskRequirement {
    pub kind: RequirementKind,
    /// m/s
    pub v_tol: f64,
    /// m/s^2
    pub a_tol: f64,
}

impl Default for TaskRequirement {
    fn default() -> Self {
        Self { kind: RequirementKind::Pos, v_tol: 0.20, a_tol: 0.10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseCadence {
    /// Fresh draws for every muscle at every control step.
    PerStep,
    /// One draw per muscle held for the whole episode.
    PerEpisode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Std of the signal-dependent (multiplicative) term.
    pub sigma1: f64,
    /// Std of the constant (additive) term.
    pub sigma2: f64,
    pub cadence: NoiseCadence,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { sigma1: 0.103, sigma2: 0.185, cadence: NoiseCadence::PerStep }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// Hand jerk normalizer (m/s^3).
    pub jerk_max: f64,
    /// Joint power normalizer.
    pub work_max: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { c1: 0.2, c2: 0.8, c3: 1.0, c4: 8.0, c5: 1.0, jerk_max: 1000.0, work_max: 100.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalSpec {
    /// Goal radius (m).
    pub p_tol: f64,
    /// Nominal goal distance used for the index of difficulty (m).
    pub distance: f64,
    /// Evaluation goal relative to the initial hand position (m).
    pub eval_offset: [f64; 2],
}

impl Default for GoalSpec {
    fn default() -> Self {
        Self { p_tol: 0.105, distance: 0.63, eval_offset: [-0.295, 0.557] }
    }
}

impl GoalSpec {
    pub fn index_of_difficulty(&self) -> Result<f64> {
        index_of_difficulty(self.distance, self.p_tol)
    }
}

/// Region training goals are drawn from: an annulus around the shoulder,
/// restricted to a polar sector measured from the downward vertical
/// (positive toward +x), and to points the arm reaches within its joint
/// limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalRegion {
    /// Inner and outer radius as fractions of the total arm length.
    pub radius_fraction: [f64; 2],
    pub angle_deg: [f64; 2],
}

impl Default for GoalRegion {
    fn default() -> Self {
        Self { radius_fraction: [0.25, 0.95], angle_deg: [-30.0, 170.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvMode {
    /// Goals sampled from [`GoalRegion`] on every reset.
    Training,
    /// Goal fixed at the initial hand position plus [`GoalSpec::eval_offset`].
    Evaluation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub variant: ModelVariant,
    pub requirement: TaskRequirement,
    pub noise: NoiseParams,
    pub weights: RewardWeights,
    pub goal: GoalSpec,
    pub region: GoalRegion,
    pub mode: EnvMode,
    /// Episode length in control steps.
    pub horizon: usize,
    /// Plant steps per control step.
    pub substeps: usize,
    /// Plant step (s).
    pub physics_dt: f64,
    pub arm: ArmParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            variant: ModelVariant::Baseline,
            requirement: TaskRequirement::default(),
            noise: NoiseParams::default(),
            weights: RewardWeights::default(),
            goal: GoalSpec::default(),
            region: GoalRegion::default(),
            mode: EnvMode::Training,
            horizon: 500,
            substeps: 5,
            physics_dt: 0.002,
            arm: ArmParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn control_dt(&self) -> f64 {
        self.physics_dt * self.substeps as f64
    }

    pub fn with_mode(&self, mode: EnvMode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        let req = &self.requirement;
        if !(req.v_tol > 0.0 && req.a_tol > 0.0) {
            return Err(Error::config("requirement tolerances must be positive"));
        }
        if !(self.noise.sigma1 >= 0.0 && self.noise.sigma2 >= 0.0) {
            return Err(Error::config("noise standard deviations must be nonnegative"));
        }
        let w = &self.weights;
        if [w.c1, w.c2, w.c3, w.c4, w.c5].iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::config("reward weights must be nonnegative"));
        }
        if !(w.c3 + w.c4 + w.c5 > 0.0) {
            return Err(Error::config("c3 + c4 + c5 must be positive"));
        }
        if !(w.jerk_max > 0.0 && w.work_max > 0.0) {
            return Err(Error::config("reward normalizers must be positive"));
        }
        if !(self.goal.p_tol > 0.0 && self.goal.distance > 0.0) {
            return Err(Error::config("goal.p_tol and goal.distance must be positive"));
        }
        let [r0, r1] = self.region.radius_fraction;
        if !(0.0 <= r0 && r0 < r1 && r1 <= 1.0) {
            return Err(Error::config("region.radius_fraction must satisfy 0 <= inner < outer <= 1"));
        }
        let [a0, a1] = self.region.angle_deg;
        if !(a0 < a1) {
            return Err(Error::config("region.angle_deg must satisfy min < max"));
        }
        if self.horizon == 0 || self.substeps == 0 || !(self.physics_dt > 0.0) {
            return Err(Error::config("horizon, substeps and physics_dt must be positive"));
        }
        if self.mode == EnvMode::Evaluation {
            self.evaluation_goal()?;
        }
        Ok(())
    }

    pub fn initial_hand(&self) -> [f64; 2] {
        arm::hand_position(ArmState::initial().q, &self.arm)
    }

    /// The fixed evaluation goal; errors when the arm cannot reach it.
    pub fn evaluation_goal(&self) -> Result<[f64; 2]> {
        let start = self.initial_hand();
        let goal = [start[0] + self.goal.eval_offset[0], start[1] + self.goal.eval_offset[1]];
        match arm::inverse_kinematics(goal, &self.arm) {
            Some(_) => Ok(goal),
            None => Err(Error::UnreachableGoal { x: goal[0], y: goal[1] }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn activations(&self) -> &[f64] {
        &self.0[obs::ACTIVATION]
    }

    pub fn goal(&self) -> [f64; 2] {
        [self.0[obs::GOAL.start], self.0[obs::GOAL.start + 1]]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardComponents {
    pub r_sparse: f64,
    pub r_effort: f64,
    /// Normalized hand jerk.
    pub r_jerk: f64,
    /// Normalized joint power.
    pub r_work: f64,
    /// Optimality term entering the total; zero for variants without it.
    pub r_optimal: f64,
    pub r_total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub position_met: bool,
    pub requirement_met: bool,
    pub applied: [f64; N_MUSCLES],
    pub fault: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub rewards: RewardComponents,
    pub done: bool,
    pub info: StepInfo,
}

/// Independent execution-noise draws for the six muscles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseDraw {
    pub eta1: [f64; N_MUSCLES],
    pub eta2: [f64; N_MUSCLES],
}

impl NoiseDraw {
    pub fn zero() -> Self {
        Self { eta1: [0.0; N_MUSCLES], eta2: [0.0; N_MUSCLES] }
    }

    pub fn sample<R: Rng + ?Sized>(noise: &NoiseParams, rng: &mut R) -> Self {
        let mut draw = Self::zero();
        // `Normal::new` only fails for a negative or NaN std, which validation excludes.
        let n1 = Normal::new(0.0, noise.sigma1).expect("sigma1 >= 0");
        let n2 = Normal::new(0.0, noise.sigma2).expect("sigma2 >= 0");
        for i in 0..N_MUSCLES {
            draw.eta1[i] = n1.sample(rng);
            draw.eta2[i] = n2.sample(rng);
        }
        draw
    }

    pub fn apply_unclamped(&self, u: &[f64; N_MUSCLES]) -> [f64; N_MUSCLES] {
        std::array::from_fn(|i| (1.0 + self.eta1[i]) * u[i] + self.eta2[i])
    }

    pub fn apply(&self, u: &[f64; N_MUSCLES]) -> [f64; N_MUSCLES] {
        self.apply_unclamped(u).map(|v| v.clamp(0.0, 1.0))
    }
}

/// Corrupt a command with fresh signal-dependent and constant noise, then
/// clamp to [0, 1].
pub fn apply_execution_noise<R: Rng + ?Sized>(
    u: &[f64; N_MUSCLES],
    noise: &NoiseParams,
    rng: &mut R,
) -> [f64; N_MUSCLES] {
    NoiseDraw::sample(noise, rng).apply(u)
}

pub fn task_requirement_met(hand: &HandState, req: &TaskRequirement) -> bool {
    match req.kind {
        RequirementKind::Pos => true,
        RequirementKind::PosVel => arm::norm2(hand.v) <= req.v_tol,
        RequirementKind::PosVelAcc => {
            arm::norm2(hand.v) <= req.v_tol && arm::norm2(hand.a) <= req.a_tol
        }
    }
}

pub fn position_met(hand: &HandState, goal: [f64; 2], p_tol: f64) -> bool {
    arm::norm2([hand.p[0] - goal[0], hand.p[1] - goal[1]]) <= p_tol
}

/// 0 when the hand is inside the goal radius and the requirement holds, -1
/// otherwise.
pub fn sparse_reward(hand: &HandState, goal: [f64; 2], p_tol: f64, req: &TaskRequirement) -> f64 {
    if position_met(hand, goal, p_tol) && task_requirement_met(hand, req) {
        0.0
    } else {
        -1.0
    }
}

/// Weighted mean of the three cost terms; jerk and work must already be
/// normalized.
pub fn optimal_reward(effort: f64, jerk: f64, work: f64, w: &RewardWeights) -> f64 {
    (w.c3 * effort + w.c4 * jerk + w.c5 * work) / (w.c3 + w.c4 + w.c5)
}

pub fn total_reward(r_sparse: f64, r_optimal: f64, w: &RewardWeights, variant: ModelVariant) -> f64 {
    let r_optimal = if variant.optimality_enabled() { r_optimal } else { 0.0 };
    w.c1 * r_sparse - w.c2 * r_optimal
}

/// Finite-difference jerk magnitude; 0 when there is no previous sample.
pub fn jerk_estimate(a_now: [f64; 2], a_prev: Option<[f64; 2]>, dt_control: f64) -> f64 {
    match a_prev {
        Some(prev) => arm::norm2([a_now[0] - prev[0], a_now[1] - prev[1]]) / dt_control,
        None => 0.0,
    }
}

/// `log2(D / W + 1)` with target width `W = 2 p_tol`.
pub fn index_of_difficulty(distance: f64, p_tol: f64) -> Result<f64> {
    if !(distance > 0.0 && p_tol > 0.0) {
        return Err(Error::config(format!(
            "index of difficulty needs positive D and p_tol, got {distance}, {p_tol}"
        )));
    }
    Ok((distance / (2.0 * p_tol) + 1.0).log2())
}

/// Draw a training goal uniformly (by area) from the configured region.
pub fn sample_training_goal<R: Rng + ?Sized>(config: &EnvConfig, rng: &mut R) -> Result<[f64; 2]> {
    let reach = config.arm.reach();
    let [f0, f1] = config.region.radius_fraction;
    let (r0, r1) = (f0 * reach, f1 * reach);
    let [a0, a1] = config.region.angle_deg.map(f64::to_radians);
    for _ in 0..10_000 {
        let r = rng.random_range(r0 * r0..=r1 * r1).sqrt();
        let angle = rng.random_range(a0..=a1);
        let p = [r * angle.sin(), -r * angle.cos()];
        if arm::inverse_kinematics(p, &config.arm).is_some() {
            return Ok(p);
        }
    }
    Err(Error::config("goal region contains no reachable point"))
}

/// Single-threaded reaching environment. Each instance owns its random
/// streams; reset it with a seed to start a reproducible episode.
#[derive(Clone, Debug)]
pub struct ReachEnv {
    config: EnvConfig,
    state: ArmState,
    hand: HandState,
    joint_acc: [f64; 2],
    goal: [f64; 2],
    noise_rng: ChaCha8Rng,
    episode_noise: NoiseDraw,
    prev_hand_acc: Option<[f64; 2]>,
    prev_joint_acc: Option<[f64; 2]>,
    prev_muscle_length: [f64; N_MUSCLES],
    muscle_velocity: [f64; N_MUSCLES],
    joint_jerk: [f64; 2],
    hand_jerk: f64,
    work: f64,
    steps: usize,
    done: bool,
}

impl ReachEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let state = ArmState::initial();
        Ok(Self {
            state,
            hand: HandState::default(),
            joint_acc: [0.0; 2],
            goal: [0.0; 2],
            noise_rng: seed::rng_from(0, &[]),
            episode_noise: NoiseDraw::zero(),
            prev_hand_acc: None,
            prev_joint_acc: None,
            prev_muscle_length: [0.0; N_MUSCLES],
            muscle_velocity: [0.0; N_MUSCLES],
            joint_jerk: [0.0; 2],
            hand_jerk: 0.0,
            work: 0.0,
            steps: 0,
            done: true,
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &ArmState {
        &self.state
    }

    pub fn hand(&self) -> &HandState {
        &self.hand
    }

    pub fn goal(&self) -> [f64; 2] {
        self.goal
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn accumulated_work(&self) -> f64 {
        self.work
    }

    /// Start a new episode. The goal stream and the noise stream are both
    /// derived from `seed`, so equal seeds give equal episodes for equal
    /// actions.
    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        self.goal = match self.config.mode {
            EnvMode::Training => sample_training_goal(&self.config, &mut seed::rng_from(seed, &[0]))?,
            EnvMode::Evaluation => self.config.evaluation_goal()?,
        };
        self.noise_rng = seed::rng_from(seed, &[1]);
        self.episode_noise = match self.config.noise.cadence {
            NoiseCadence::PerEpisode if self.config.variant.noise_enabled() => {
                NoiseDraw::sample(&self.config.noise, &mut self.noise_rng)
            }
            _ => NoiseDraw::zero(),
        };
        self.state = ArmState::initial();
        self.prev_hand_acc = None;
        self.prev_joint_acc = None;
        self.joint_jerk = [0.0; 2];
        self.hand_jerk = 0.0;
        self.work = 0.0;
        self.steps = 0;
        self.done = false;
        self.refresh_kinematics()?;
        self.prev_muscle_length = self.muscle_lengths();
        self.muscle_velocity = [0.0; N_MUSCLES];
        Ok(self.observe())
    }

    fn refresh_kinematics(&mut self) -> Result<()> {
        let torques = arm::muscle_torques(&self.state.act, &self.config.arm)?;
        self.joint_acc = arm::constrained_accelerations(&self.state, torques, &self.config.arm)?;
        self.hand = arm::hand_state(&self.state, self.joint_acc, &self.config.arm);
        Ok(())
    }

    fn muscle_lengths(&self) -> [f64; N_MUSCLES] {
        let q = self.state.q;
        std::array::from_fn(|i| {
            let r = self.config.arm.moment_arms[i];
            r[0] * q[0] + r[1] * q[1]
        })
    }

    fn observe(&self) -> Observation {
        let mut o = [0.0; OBS_DIM];
        o[obs::HAND_POS].copy_from_slice(&self.hand.p);
        o[obs::HAND_VEL].copy_from_slice(&self.hand.v);
        o[obs::HAND_ACC].copy_from_slice(&self.hand.a);
        o[obs::JOINT_POS].copy_from_slice(&self.state.q);
        o[obs::JOINT_VEL].copy_from_slice(&self.state.qd);
        o[obs::JOINT_ACC].copy_from_slice(&self.joint_acc);
        o[obs::JOINT_JERK].copy_from_slice(&self.joint_jerk);
        o[obs::ACTIVATION].copy_from_slice(&self.state.act);
        o[obs::FORCE].copy_from_slice(&arm::muscle_forces(&self.state.act, &self.config.arm));
        o[obs::MUSCLE_LENGTH].copy_from_slice(&self.muscle_lengths());
        o[obs::MUSCLE_VELOCITY].copy_from_slice(&self.muscle_velocity);
        o[obs::WORK] = self.work;
        o[obs::HAND_JERK] = self.hand_jerk;
        o[obs::GOAL].copy_from_slice(&self.goal);
        Observation(o)
    }

    /// Advance one control step with stimulations `u` (clamped to [0, 1]).
    ///
    /// A plant blow-up does not return an error: the episode ends with
    /// `info.fault` set and the observation of the last finite state.
    pub fn step(&mut self, u: &[f64; N_MUSCLES]) -> Result<StepResult> {
        if self.done {
            return Err(Error::config("step called on a finished episode; call reset first"));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "stimulation", t: self.state.t });
        }
        let cfg = &self.config;
        let u = u.map(|v| v.clamp(0.0, 1.0));
        let applied = if cfg.variant.noise_enabled() {
            match cfg.noise.cadence {
                NoiseCadence::PerStep => apply_execution_noise(&u, &cfg.noise, &mut self.noise_rng),
                NoiseCadence::PerEpisode => self.episode_noise.apply(&u),
            }
        } else {
            u
        };

        let control_dt = cfg.control_dt();
        let mut fault = false;
        for _ in 0..cfg.substeps {
            match arm::step(&self.state, &applied, cfg.physics_dt, &cfg.arm) {
                Ok(next) => {
                    let torques = arm::muscle_torques(&next.act, &cfg.arm)?;
                    self.work += arm::instantaneous_power(next.qd, torques) * cfg.physics_dt;
                    self.state = next;
                }
                Err(Error::NonFinite { .. }) => {
                    fault = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        self.steps += 1;
        if fault || self.refresh_kinematics().is_err() {
            self.done = true;
            let rewards = RewardComponents {
                r_sparse: -1.0,
                r_total: total_reward(-1.0, 0.0, &self.config.weights, self.config.variant),
                ..Default::default()
            };
            return Ok(StepResult {
                observation: self.observe(),
                rewards,
                done: true,
                info: StepInfo { position_met: false, requirement_met: false, applied, fault: true },
            });
        }

        let cfg = &self.config;
        self.hand_jerk = jerk_estimate(self.hand.a, self.prev_hand_acc, control_dt);
        self.joint_jerk = match self.prev_joint_acc {
            Some(prev) => std::array::from_fn(|j| (self.joint_acc[j] - prev[j]) / control_dt),
            None => [0.0; 2],
        };
        self.prev_hand_acc = Some(self.hand.a);
        self.prev_joint_acc = Some(self.joint_acc);
        let lengths = self.muscle_lengths();
        self.muscle_velocity =
            std::array::from_fn(|i| (lengths[i] - self.prev_muscle_length[i]) / control_dt);
        self.prev_muscle_length = lengths;

        let torques = arm::muscle_torques(&self.state.act, &cfg.arm)?;
        let w = &cfg.weights;
        let r_effort = u.iter().sum::<f64>() / N_MUSCLES as f64;
        let r_jerk = self.hand_jerk / w.jerk_max;
        let r_work = arm::instantaneous_power(self.state.qd, torques) / w.work_max;
        let r_optimal = if cfg.variant.optimality_enabled() {
            optimal_reward(r_effort, r_jerk, r_work, w)
        } else {
            0.0
        };
        let position_met = position_met(&self.hand, self.goal, cfg.goal.p_tol);
        let requirement_met = task_requirement_met(&self.hand, &cfg.requirement);
        let r_sparse = if position_met && requirement_met { 0.0 } else { -1.0 };
        let r_total = total_reward(r_sparse, r_optimal, w, cfg.variant);
        self.done = r_sparse == 0.0 || self.steps >= cfg.horizon;

        Ok(StepResult {
            observation: self.observe(),
            rewards: RewardComponents { r_sparse, r_effort, r_jerk, r_work, r_optimal, r_total },
            done: self.done,
            info: StepInfo { position_met, requirement_met, applied, fault: false },
        })
    }
}
