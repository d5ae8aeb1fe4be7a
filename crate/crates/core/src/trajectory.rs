//! Recorded episodes.
//!
//! A [`Trajectory`] holds one row per control instant: the initial state at
//! t = 0 followed by the post-step state of every control step, so an episode
//! that succeeds after `n` steps has `n + 1` rows and a movement time of
//! `n * 10 ms`.

use serde::{Deserialize, Serialize};

use crate::arm::{ArmState, HandState, N_MUSCLES};
use crate::env::RewardComponents;

/// Column names, in row order.
pub const COLUMNS: [&str; N_COLUMNS] = [
    "t", "q1", "q2", "qd1", "qd2", "hand_x", "hand_y", "hand_vx", "hand_vy", "hand_ax", "hand_ay",
    "speed", "u1", "u2", "u3", "u4", "u5", "u6", "a1", "a2", "a3", "a4", "a5", "a6", "r_sparse",
    "r_effort", "r_jerk", "r_work", "r_total",
];
pub const N_COLUMNS: usize = 29;

pub mod col {
    pub const T: usize = 0;
    pub const Q: usize = 1;
    pub const QD: usize = 3;
    pub const HAND_P: usize = 5;
    pub const HAND_V: usize = 7;
    pub const HAND_A: usize = 9;
    pub const SPEED: usize = 11;
    pub const U: usize = 12;
    pub const ACT: usize = 18;
    pub const R_SPARSE: usize = 24;
    pub const R_EFFORT: usize = 25;
    pub const R_JERK: usize = 26;
    pub const R_WORK: usize = 27;
    pub const R_TOTAL: usize = 28;
}

pub type Row = [f64; N_COLUMNS];

/// Build one row from the plant state, the hand state, the applied
/// stimulations and the step's reward components.
pub fn make_row(
    state: &ArmState,
    hand: &HandState,
    applied: &[f64; N_MUSCLES],
    rewards: &RewardComponents,
) -> Row {
    let mut r = [0.0; N_COLUMNS];
    r[col::T] = state.t;
    r[col::Q..col::Q + 2].copy_from_slice(&state.q);
    r[col::QD..col::QD + 2].copy_from_slice(&state.qd);
    r[col::HAND_P..col::HAND_P + 2].copy_from_slice(&hand.p);
    r[col::HAND_V..col::HAND_V + 2].copy_from_slice(&hand.v);
    r[col::HAND_A..col::HAND_A + 2].copy_from_slice(&hand.a);
    r[col::SPEED] = hand.v[0].hypot(hand.v[1]);
    r[col::U..col::U + N_MUSCLES].copy_from_slice(applied);
    r[col::ACT..col::ACT + N_MUSCLES].copy_from_slice(&state.act);
    r[col::R_SPARSE] = rewards.r_sparse;
    r[col::R_EFFORT] = rewards.r_effort;
    r[col::R_JERK] = rewards.r_jerk;
    r[col::R_WORK] = rewards.r_work;
    r[col::R_TOTAL] = rewards.r_total;
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<Row>,
    pub goal: [f64; 2],
    pub seed: u64,
    pub success: bool,
    pub faulted: bool,
    /// Steps to success times the control period; the elapsed time for
    /// unsuccessful episodes.
    pub movement_time: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of control steps (rows after the initial one).
    pub fn n_steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }

    pub fn hand_path(&self) -> Vec<[f64; 2]> {
        self.rows.iter().map(|r| [r[col::HAND_P], r[col::HAND_P + 1]]).collect()
    }

    pub fn start(&self) -> Option<[f64; 2]> {
        self.rows.first().map(|r| [r[col::HAND_P], r[col::HAND_P + 1]])
    }

    pub fn episode_return(&self) -> f64 {
        self.rows.iter().skip(1).map(|r| r[col::R_TOTAL]).sum()
    }
}
