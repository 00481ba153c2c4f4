//! Configuration, experiment orchestration and CSV emission.

mod config;
mod experiment;

pub use config::{EnvSpec, RunConfig, Settings, KNOWN_KEYS};
pub use experiment::{
    build_learner, prepare_env, run_experiment, schedule_csv, simulate, sweep_scaling, q_snapshot_csv,
    scaling_csv, v_snapshot_csv, Cadence, RunOutput, RunSummary, ScalingRow, SCALING_CSV_HEADER,
};
pub use crate::rng::seeded_stream;
