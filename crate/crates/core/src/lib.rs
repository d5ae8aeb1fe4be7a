//! Musculoskeletal reaching laboratory: a two-joint, six-muscle planar arm,
//! an episodic reaching environment with execution noise and composed
//! rewards, a population-based policy trainer, and the movement metrics used
//! to judge how human-like the learned reaches are.

pub mod arm;
pub mod cem;
pub mod env;
pub mod metrics;
mod error;
pub mod policy;
pub mod seed;
pub mod train;
pub mod trajectory;

pub use error::{Error, Result};
