//! Experiment harness: data ingestion, noise, metrics, the noise-level sweep
//! and its CSV/SVG outputs.

pub mod config;
pub mod dataset;
pub mod io;
pub mod metrics;
pub mod plot;
pub mod sweep;

pub use config::{prepare_inputs, run_plan, split_dataset, SweepInputs, SweepPlan};
pub use dataset::{complexify, holdout_split, load_digits, load_pixels, DIGIT_PIXELS};
pub use io::{emit_csv, read_csv};
pub use metrics::{add_noise, relative_error, snr_db};
pub use plot::{emit_plot, render_svg};
pub use sweep::{
    default_sigma_grid, log_grid, run_sweep, CellSummary, ExperimentConfig, LambdaRule, Scenario,
    SweepContext, SweepRecord, SweepResult,
};
