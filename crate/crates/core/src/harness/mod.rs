//! Monte Carlo experiments, metrics and report writers.

pub mod config;
pub mod experiments;
pub mod metrics;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, Mode, StepKind};
pub use experiments::{
    run_analysis, run_crlb_surface, run_dynamic, run_static_mse, trial_rng, DynamicReport, DynamicRow, HarnessError,
    StaticReport, StaticRow, Stream, SurfaceReport,
};
pub use report::{run_to_dir, RunOutput};
