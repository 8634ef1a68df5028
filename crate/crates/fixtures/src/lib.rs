//! Synthetic Android extraction trees with known contents.
//!
//! A [`Scenario`] lists activities (chats, media, calls, texts) between
//! fictional actors. [`generate_scenario`] turns it into SQL scripts, a file
//! layout and the report a correct parse must produce; [`materialize`] runs
//! the scripts and writes the tree.

pub mod generate;
pub mod materialize;
pub mod scenario;
pub mod sql;

use std::path::PathBuf;

pub use generate::{generate_scenario, Generated, GroundTruth};
pub use materialize::{engine_available, materialize, write_tar, MaterializeError, Materialized};
pub use scenario::{Scenario, ScenarioError};

/// Directory holding the committed golden scenario, tree and report.
pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("golden")
}
