//! Seeded Monte-Carlo estimators that confront simulated trajectories with
//! the closed-form bounds, plus configuration, CSV/JSON output and the CLI.
//!
//! Trial `k` of a run draws from the independent stream `(seed, k)`, so every
//! output byte depends only on the configuration, never on the worker count.

mod cli;
pub mod config;
pub mod estimators;
pub mod output;
pub mod parallel;
pub mod stats;

pub use cli::{run_cli, verify};
pub use config::{ExperimentConfig, Problem, Scenario};
pub use estimators::{
    estimate_chi2_laplace, estimate_event_probability, estimate_forgetting_rate, estimate_moments, flow_contraction,
    gronwall_test_process, lipschitz_check, verify_trace_bound,
};
pub use output::{Check, Summary};
pub use stats::{CiMethod, EstimateWithCI};
