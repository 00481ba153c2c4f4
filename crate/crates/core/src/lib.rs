//! Tabular episodic reinforcement learning: exact dynamic-programming
//! oracles, stage-based optimistic Q-learning with reference-advantage
//! updates, comparator learners, regret and switching-cost monitors, a
//! concurrent-round simulator and a reproducible experiment harness.
//!
//! Indexing convention: steps `h` are 0-based in the API (`0..H`), while
//! every CSV and text file written by this crate uses 1-based steps to match
//! the usual `h = 1..H` notation. States and actions are 0-based everywhere.

pub mod concurrent;
pub mod error;
pub mod harness;
pub mod learner;
pub mod mdp;
pub mod metrics;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
pub use mdp::{DeterministicPolicy, Dims, EpisodicMdp, InitialStateMode, ValueTables};
pub use schedule::StageSchedule;
