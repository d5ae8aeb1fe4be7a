//! Grid orchestration for reachlab: configuration files, training and
//! evaluation of the model × requirement × tolerance grid, run manifests,
//! trajectory files and report generation.

pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod manifest;
pub mod svg;
pub mod trajio;

pub use error::{HarnessError, Result};
