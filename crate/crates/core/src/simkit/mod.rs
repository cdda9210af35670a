//! Seeded Monte Carlo harness: misalignment-probability tables, spectral
//! efficiency samples and empirical parameter sweeps.
//!
//! Trials run in parallel; each trial owns its random streams (see [`rng`])
//! and results are reduced as integer counts or trial-ordered vectors, so
//! output does not depend on the worker count.

pub mod config;
mod experiment;
pub mod output;
pub mod rng;

pub use config::{
    Antennas, BoundOptions, ChannelParams, CodebookSizes, ExperimentConfig, Scenario, SchemeSpec, SeEval, SweepGrid,
};
pub use experiment::{
    channel_fingerprint, empirical_param_sweep, run_misalignment_experiment, run_se_experiment, standard_error,
    trial_trace, with_worker_pool, Metadata, ResultRow, ResultTable, RowError, ScenarioContext, SeSample, SeSummary,
    SweepCell, SweepResult, OUTAGE_RATE,
};
