//! Error metrics and experiment orchestration.
//!
//! An [`ExperimentConfig`] names a suite, its cases `E1..E4` and a solver;
//! [`run_experiment`] samples the test set, generates reference
//! trajectories, runs the solver for every seed and aggregates the
//! frame-averaged relative errors into a [`Report`].

mod config;
mod metrics;
mod report;
mod run;

pub use config::{
    CaseId, ExperimentConfig, SolverUnderTest, Suite, DESK_TEST_SIZE, PAPER_TEST_SIZE,
};
pub use metrics::{frame_error, relative_errors, ErrorSummary, FrameError};
pub use report::{CaseReport, Report, SeedRow, Stat, Timings};
pub use run::{instance_seed, run_experiment, test_set, TestInstance};
