//! Synthetic benchmarks for `tear-core`: data generation, error metrics and
//! trial sweeps.

pub mod alloc;
pub mod metrics;
pub mod sweep;
pub mod synth;

pub use metrics::{evaluate, f1_score, rotation_error, Metrics, RecallThresholds};
pub use sweep::{
    median, run_trial, summarize, sweep, write_csv, CellSummary, Solver, SweepRow, SweepSpec,
};
pub use synth::{
    generate_synthetic, random_rotation, trial_seed, GroundTruth, SyntheticConfig, XI_PER_SIGMA,
};
